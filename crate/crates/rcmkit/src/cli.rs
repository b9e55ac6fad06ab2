//! Argument parsing and the four subcommands.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rcmkit_core::cache::{DEFAULT_RADIUS_FACTOR, DEFAULT_VIEW_COUNT};
use rcmkit_core::consistency::{compute_tssim_in, DEFAULT_SPLAT_RADIUS};
use rcmkit_core::raster::frame_poses;
use rcmkit_core::{compute_aabb, compute_rcm_colors, mask_iou, oracle_pointmaps, rasterize, Rgb, SsimRegion};

use crate::cache::build_cache;
use crate::error::{Error, Result};
use crate::images::{encode_depth, encode_mask_png, encode_rgb_png, depth_sidecar_json, read_mask_png};
use crate::json::{load_camera, load_trajectory, read_json, to_json_string, CameraJson, ReportJson};
use crate::obj::load_mesh;
use crate::pointmap::load_frames_manifest;

#[derive(Debug, Parser)]
#[command(name = "rcmkit", version, about = "Render relative coordinate maps and score geometry consistency")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Mode {
    Rcm,
    Rgb,
    Depth,
    Mask,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render RCM, albedo, depth and mask frames of a mesh along a pose trajectory.
    Render {
        /// Wavefront OBJ mesh.
        #[arg(long)]
        mesh: PathBuf,
        /// PNG texture for meshes with texture coordinates [default: none].
        #[arg(long)]
        texture: Option<PathBuf>,
        /// Trajectory JSON: {"fps", "keyframes": [{"t", "pose"}]} with object-to-world poses.
        #[arg(long)]
        trajectory: PathBuf,
        /// Camera JSON: {"fx", "fy", "cx", "cy", "width", "height", "pose"}; width/height default to 512, pose to identity.
        #[arg(long)]
        camera: PathBuf,
        /// Number of frames, sampled at the trajectory fps from its first keyframe.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        frames: u32,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated outputs to write.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "rcm,rgb,depth,mask")]
        modes: Vec<Mode>,
        /// Background color as RRGGBB hex.
        #[arg(long, value_parser = parse_color, default_value = "FFFFFF")]
        background: Rgb,
    },
    /// Build an RCM cache of paired RCM/albedo views from a Fibonacci lattice.
    Cache {
        /// Wavefront OBJ mesh.
        #[arg(long)]
        mesh: PathBuf,
        /// PNG texture for meshes with texture coordinates [default: none].
        #[arg(long)]
        texture: Option<PathBuf>,
        /// Number of views (at least 1).
        #[arg(long, default_value_t = DEFAULT_VIEW_COUNT)]
        views: usize,
        /// Camera JSON supplying the intrinsics; its pose is ignored.
        #[arg(long)]
        camera: PathBuf,
        /// Camera distance as a multiple of the bounding-box diagonal.
        #[arg(long, default_value_t = DEFAULT_RADIUS_FACTOR)]
        radius_factor: f64,
        /// Output directory for cache.json and view images.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score cross-frame consistency (T-SSIM) from point maps or from a rendered oracle.
    Tssim {
        /// Frames manifest: {"frames": [{"image", "pointmap", "camera"}]}, paths relative to it.
        #[arg(long, conflicts_with = "oracle", required_unless_present = "oracle")]
        manifest: Option<PathBuf>,
        /// Render the sequence and use its exact depth as the reconstruction.
        #[arg(long, requires_all = ["mesh", "trajectory", "camera", "frames"])]
        oracle: bool,
        /// Oracle mode: Wavefront OBJ mesh.
        #[arg(long, requires = "oracle")]
        mesh: Option<PathBuf>,
        /// Oracle mode: PNG texture [default: none].
        #[arg(long, requires = "oracle")]
        texture: Option<PathBuf>,
        /// Oracle mode: trajectory JSON.
        #[arg(long, requires = "oracle")]
        trajectory: Option<PathBuf>,
        /// Oracle mode: camera JSON.
        #[arg(long, requires = "oracle")]
        camera: Option<PathBuf>,
        /// Oracle mode: number of frames.
        #[arg(long, requires = "oracle", value_parser = clap::value_parser!(u32).range(1..))]
        frames: Option<u32>,
        /// Half-width of the square splat used when reprojecting points.
        #[arg(long, default_value_t = DEFAULT_SPLAT_RADIUS)]
        splat_radius: usize,
        /// Compare only the bounding box of each frame's points instead of the full frame.
        #[arg(long)]
        crop: bool,
        /// Report JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Intersection over union of two mask PNGs (luma >= 128 is foreground).
    Iou { mask_a: PathBuf, mask_b: PathBuf },
}

fn parse_color(s: &str) -> std::result::Result<Rgb, String> {
    let hex = s.strip_prefix('#').unwrap_or(s);
    if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("expected RRGGBB hex, got {s:?}"));
    }
    let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("validated hex");
    Ok([byte(0), byte(2), byte(4)])
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", single_line(&e.to_string()));
            1
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Render {
            mesh,
            texture,
            trajectory,
            camera,
            frames,
            out,
            modes,
            background,
        } => cmd_render(&mesh, texture.as_deref(), &trajectory, &camera, frames as usize, &out, &modes, background),
        Command::Cache {
            mesh,
            texture,
            views,
            camera,
            radius_factor,
            out,
        } => {
            let mesh = load_mesh(&mesh, texture.as_deref())?;
            let intr = read_json::<CameraJson>(&camera)?.intrinsics()?;
            let cache = build_cache(&mesh, views, &intr, radius_factor, &out)?;
            println!("{}", cache.manifest_path().display());
            Ok(())
        }
        Command::Tssim {
            manifest,
            mesh,
            texture,
            trajectory,
            camera,
            frames,
            splat_radius,
            crop,
            out,
            ..
        } => {
            let region = if crop { SsimRegion::ObjectCrop } else { SsimRegion::FullFrame };
            let report = match manifest {
                Some(path) => {
                    let set = load_frames_manifest(&path)?;
                    compute_tssim_in(&set.frames, &set.maps, &set.cams, splat_radius, region)?
                }
                None => {
                    let missing = |name: &str| Error::Invalid(format!("--oracle requires --{name}"));
                    let mesh = load_mesh(&mesh.ok_or_else(|| missing("mesh"))?, texture.as_deref())?;
                    let traj = load_trajectory(&trajectory.ok_or_else(|| missing("trajectory"))?)?;
                    let cam = load_camera(&camera.ok_or_else(|| missing("camera"))?)?;
                    let n = frames.ok_or_else(|| missing("frames"))? as usize;
                    let colors = compute_rcm_colors(&mesh, &compute_aabb(&mesh)?)?;
                    let seq = oracle_pointmaps(&mesh, &colors, &traj, &cam, n)?;
                    compute_tssim_in(&seq.frames, &seq.maps, &seq.cams, splat_radius, region)?
                }
            };
            fs::write(&out, to_json_string(&ReportJson::from(&report))).map_err(|e| Error::io(&out, e))?;
            println!("{:.4}", report.t_ssim);
            Ok(())
        }
        Command::Iou { mask_a, mask_b } => {
            let a = read_mask_png(&mask_a)?;
            let b = read_mask_png(&mask_b)?;
            println!("{:.4}", mask_iou(&a, &b)?);
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    mesh: &Path,
    texture: Option<&Path>,
    trajectory: &Path,
    camera: &Path,
    n_frames: usize,
    out: &Path,
    modes: &[Mode],
    background: Rgb,
) -> Result<()> {
    let mesh = load_mesh(mesh, texture)?;
    let traj = load_trajectory(trajectory)?;
    let cam = load_camera(camera)?;
    let colors = compute_rcm_colors(&mesh, &compute_aabb(&mesh)?)?;
    let poses = frame_poses(&traj, n_frames)?;
    let mut modes = modes.to_vec();
    modes.sort();
    modes.dedup();

    let created_dir = !out.exists();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for (i, pose) in poses.iter().enumerate() {
            let fb = rasterize(&mesh, &colors, pose, &cam, background)?;
            for mode in &modes {
                let files: Vec<(PathBuf, Vec<u8>)> = match mode {
                    Mode::Rcm => {
                        let p = out.join(format!("frame_{i}_rcm.png"));
                        let bytes = encode_rgb_png(&p, &fb.rcm)?;
                        vec![(p, bytes)]
                    }
                    Mode::Rgb => {
                        let p = out.join(format!("frame_{i}_rgb.png"));
                        let bytes = encode_rgb_png(&p, &fb.rgb)?;
                        vec![(p, bytes)]
                    }
                    Mode::Mask => {
                        let p = out.join(format!("frame_{i}_mask.png"));
                        let bytes = encode_mask_png(&p, &fb.mask)?;
                        vec![(p, bytes)]
                    }
                    Mode::Depth => vec![
                        (out.join(format!("frame_{i}_depth.f32")), encode_depth(&fb.depth)),
                        (out.join(format!("frame_{i}_depth.json")), depth_sidecar_json(&fb.depth).into_bytes()),
                    ],
                };
                for (p, bytes) in files {
                    written.push(p.clone());
                    fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
                }
            }
        }
        Ok(())
    })();
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        if created_dir {
            let _ = fs::remove_dir(out);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn colors() {
        assert_eq!(parse_color("FFFFFF"), Ok([255, 255, 255]));
        assert_eq!(parse_color("#10a0Ff"), Ok([16, 160, 255]));
        assert!(parse_color("FFF").is_err());
        assert!(parse_color("GGGGGG").is_err());
    }

    #[test]
    fn help_lists_defaults() {
        let mut cmd = Cli::command();
        let render = cmd.find_subcommand_mut("render").unwrap().render_long_help().to_string();
        assert!(render.contains("rcm,rgb,depth,mask"));
        assert!(render.contains("FFFFFF"));
        let cache = cmd.find_subcommand_mut("cache").unwrap().render_long_help().to_string();
        assert!(cache.contains("default: 6"));
        assert!(cache.contains("default: 2.5"));
        let tssim = cmd.find_subcommand_mut("tssim").unwrap().render_long_help().to_string();
        assert!(tssim.contains("default: 1"));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["rcmkit", "render", "--trajectory", "t.json"]), 1);
        assert_eq!(run(["rcmkit", "--version"]), 0);
        assert_eq!(run(["rcmkit", "tssim", "--out", "r.json"]), 1);
        assert_eq!(run(["rcmkit", "tssim", "--oracle", "--out", "r.json"]), 1);
    }
}

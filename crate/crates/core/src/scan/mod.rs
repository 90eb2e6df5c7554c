//! Parameter scans over signal detuning and optical length, map exports and
//! SVG rendering.

pub mod config;
pub mod render;
pub mod run;

pub use config::{load_config, parse_config, Axis, FileConfig, MapKind, ScanSpec};
pub use render::{read_map_csv, render_map, render_svg, Heatmap, DEFAULT_CONTOUR};
pub use run::{run_maps, run_scan, scan_csv, scan_points, PointResult, ScanResult};

/// Environment variable that overrides the output root of the config.
pub const OUT_ENV: &str = "ECHOMEM_OUT";

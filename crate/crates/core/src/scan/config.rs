//! TOML scan configuration.
//!
//! ```toml
//! [protocol]
//! variant = "backward_echo"        # or "forward_echo"
//! # shelving = "ideal_swap"         # default per variant
//! # transfer_efficiency = 1.0
//!
//! [signal]
//! tau = 1.0                        # µs
//! # amplitude = 1e-3               # rad/µs; the echo is linear in it
//! # window = 5.0                   # half-width, default 5τ
//!
//! [control]
//! kind = "sech_chirp"              # or "pi_sech"
//! omega0 = 10.0
//! tau = 1.0
//! mu = -20.0
//! # window = 10.0                  # half-width, default 10τ
//!
//! [line]
//! kind = "flat"                    # or "gaussian" with sigma_delta
//! # cutoff = 46.0                  # default 2(|μ|/τ + 3/τ), or 6σ
//!
//! [grid]
//! # delta_step = 0.08              # flat line
//! # n_delta = 401                  # gaussian line
//! # zeta_step = 0.1
//! # dt = 0.0015                    # default from the resolution guard
//!
//! [schedule]
//! # t0 = 0.0
//! # margin = 0.5                   # or t1, t2, t3 explicitly
//!
//! [scan]
//! detuning = [0.0]                 # or { start, stop, count }
//! zeta_l = { start = 0.4, stop = 8.0, count = 20 }
//! # maps = ["rephasing", "excitation"]
//! # workers = 1
//! # out = "out"
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LineKind, LineShape, PulseKind, PulseSpec, Schedule, SimGrid};
use crate::protocol::{ProtocolConfig, Shelving, Variant};

pub const DEFAULT_SIGNAL_AMPLITUDE: f64 = 1e-3;
pub const DEFAULT_ZETA_STEP: f64 = 0.1;
pub const DEFAULT_MARGIN: f64 = 0.5;
pub const DEFAULT_GAUSSIAN_NODES: usize = 401;
/// Axis length used for `{ start, stop }` without a count.
pub const DEFAULT_AXIS_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub signal: SignalSection,
    pub control: ControlSection,
    #[serde(default)]
    pub line: LineSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    pub scan: ScanSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub variant: Variant,
    pub shelving: Option<Shelving>,
    pub transfer_efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub tau: f64,
    pub amplitude: Option<f64>,
    pub window: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        SignalSection {
            tau: 1.0,
            amplitude: None,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    SechChirp,
    PiSech,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub kind: ControlKind,
    /// Ignored for `pi_sech`, whose peak is `1/τ`.
    pub omega0: Option<f64>,
    pub tau: f64,
    pub mu: Option<f64>,
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    pub kind: Option<LineKind>,
    pub sigma_delta: Option<f64>,
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub delta_step: Option<f64>,
    pub n_delta: Option<usize>,
    pub zeta_step: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: Option<usize>,
    },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Range { start, stop, count } => {
                let n = count.unwrap_or(DEFAULT_AXIS_POINTS);
                match n {
                    0 => vec![],
                    1 => vec![*start],
                    _ => (0..n)
                        .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                        .collect(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Rephasing,
    Excitation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub detuning: Axis,
    pub zeta_l: Axis,
    #[serde(default)]
    pub maps: Vec<MapKind>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Validated scan: a base protocol on the deepest medium plus the axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSpec {
    /// Grid spans the largest `ζ_L`; each point truncates it.
    pub base: ProtocolConfig,
    pub detuning: Vec<f64>,
    pub zeta_l: Vec<f64>,
    pub maps: Vec<MapKind>,
    pub workers: usize,
    pub out: PathBuf,
    /// The file as read, with every default filled in.
    pub resolved: FileConfig,
}

pub fn load_config(path: &Path) -> Result<ScanSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ScanSpec> {
    let file: FileConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.message().to_string(),
        }
    })?;
    build(file)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be > 0, got {v}")))
    }
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("scan axis {name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("scan axis {name} has non-finite values")));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::Config(format!("scan axis {name} is not strictly monotone")));
    }
    Ok(())
}

fn build(mut file: FileConfig) -> Result<ScanSpec> {
    let variant = file.protocol.variant;

    let sig = &mut file.signal;
    positive("signal.tau", sig.tau)?;
    let amplitude = *sig.amplitude.get_or_insert(DEFAULT_SIGNAL_AMPLITUDE);
    let mut signal = PulseSpec::gaussian_signal(amplitude, sig.tau, 0.0);
    let sig_window = *sig.window.get_or_insert(signal.window_halfwidth);
    signal = signal.with_window(sig_window);

    let c = &mut file.control;
    positive("control.tau", c.tau)?;
    let mut control = match c.kind {
        ControlKind::SechChirp => {
            let omega0 = c.omega0.ok_or_else(|| Error::Config("control.omega0 is required for sech_chirp".into()))?;
            let mu = *c.mu.get_or_insert(0.0);
            PulseSpec::sech_chirp(omega0, c.tau, mu)
        }
        ControlKind::PiSech => {
            if c.mu.is_some_and(|m| m != 0.0) {
                return Err(Error::Config("pi_sech controls are unchirped; drop control.mu".into()));
            }
            let p = PulseSpec::pi_sech(c.tau);
            c.omega0 = Some(p.omega0);
            c.mu = Some(0.0);
            p
        }
    };
    let ctl_window = *c.window.get_or_insert(control.window_halfwidth);
    control = control.with_window(ctl_window);
    debug_assert!(matches!(control.kind, PulseKind::SechChirp | PulseKind::PiSech));

    let l = &mut file.line;
    let kind = *l.kind.get_or_insert(LineKind::Flat);
    let line = match kind {
        LineKind::Flat => {
            if l.sigma_delta.is_some() {
                return Err(Error::Config("line.sigma_delta applies to gaussian lines only".into()));
            }
            let cutoff = *l.cutoff.get_or_insert(LineShape::default_flat_cutoff(control.mu, control.tau));
            LineShape::flat(positive("line.cutoff", cutoff)?)
        }
        LineKind::Gaussian => {
            let sigma = l
                .sigma_delta
                .ok_or_else(|| Error::Config("line.sigma_delta is required for a gaussian line".into()))?;
            let mut g = LineShape::gaussian(positive("line.sigma_delta", sigma)?);
            g.delta_cutoff = positive("line.cutoff", *l.cutoff.get_or_insert(g.delta_cutoff))?;
            g
        }
    };
    line.validate()?;

    let s = &mut file.schedule;
    let t0 = *s.t0.get_or_insert(0.0);
    let schedule = match (s.t1, s.t2, s.t3) {
        (None, None, None) => {
            // the resolved file keeps the explicit times, not the margin
            let margin = s.margin.take().unwrap_or(DEFAULT_MARGIN);
            let p = Schedule::packed(t0, sig_window, ctl_window, margin);
            s.t1 = Some(p.t1);
            s.t2 = Some(p.t2);
            s.t3 = Some(p.t3);
            p
        }
        (Some(t1), Some(t2), Some(t3)) => {
            if s.margin.is_some() {
                return Err(Error::Config("schedule.margin only applies when t1, t2, t3 are omitted".into()));
            }
            Schedule {
                t0,
                t1,
                t2,
                t3,
                signal_half: sig_window,
                control_half: ctl_window,
            }
        }
        _ => return Err(Error::Config("give all of schedule.t1, t2, t3 or none".into())),
    };

    let detuning = file.scan.detuning.values();
    let zeta_l = file.scan.zeta_l.values();
    check_axis("detuning", &detuning)?;
    check_axis("zeta_l", &zeta_l)?;
    if zeta_l.iter().any(|&z| z < 0.0) {
        return Err(Error::Config("zeta_l values must be >= 0".into()));
    }

    let g = &mut file.grid;
    let zeta_step = positive("grid.zeta_step", *g.zeta_step.get_or_insert(DEFAULT_ZETA_STEP))?;
    for &z in &zeta_l {
        let n = (z / zeta_step).round();
        if (n * zeta_step - z).abs() > 1e-9 * (1.0 + z) {
            return Err(Error::Config(format!(
                "zeta_l = {z} is not a multiple of grid.zeta_step = {zeta_step}"
            )));
        }
    }
    let zeta_max = zeta_l.iter().copied().fold(0.0, f64::max);
    let max_offset = detuning.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if max_offset > line.delta_cutoff {
        return Err(Error::Config(format!(
            "signal detuning {max_offset} exceeds the line cutoff {}",
            line.delta_cutoff
        )));
    }
    let span = (schedule.t3 + sig_window) - (schedule.t0 - sig_window);
    let mut grid = match kind {
        LineKind::Flat => {
            if g.n_delta.is_some() {
                return Err(Error::Config("grid.n_delta applies to gaussian lines; use grid.delta_step".into()));
            }
            // Default spacing: 90% of the largest revival-free step.
            let step = *g.delta_step.get_or_insert(0.9 * 2.0 * std::f64::consts::PI / span);
            SimGrid::with_delta_step(&line, positive("grid.delta_step", step)?, zeta_max, zeta_step, 1.0)?
        }
        LineKind::Gaussian => {
            if g.delta_step.is_some() {
                return Err(Error::Config("grid.delta_step applies to flat lines; use grid.n_delta".into()));
            }
            let n = *g.n_delta.get_or_insert(DEFAULT_GAUSSIAN_NODES);
            SimGrid::new(&line, n, zeta_max, zeta_step, 1.0)?
        }
    };
    let max_rabi = control.omega0;
    let phase_rate = control.max_phase_rate().max(max_offset);
    let dt = *g.dt.get_or_insert(grid.guard_dt(max_rabi, phase_rate));
    grid.dt = positive("grid.dt", dt)?;
    grid.check_resolution(grid.dt, max_rabi, phase_rate)?;

    let mut base = ProtocolConfig::new(variant, signal, control, schedule, line, grid);
    if let Some(sh) = file.protocol.shelving {
        base.shelving = sh;
    }
    file.protocol.shelving = Some(base.shelving);
    base.transfer_efficiency = *file.protocol.transfer_efficiency.get_or_insert(1.0);
    base.validate()?;

    let workers = *file.scan.workers.get_or_insert(1);
    if workers == 0 {
        return Err(Error::Config("scan.workers must be >= 1".into()));
    }
    let out = file.scan.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    file.scan.out = Some(out.clone());
    Ok(ScanSpec {
        base,
        detuning,
        zeta_l,
        maps: file.scan.maps.clone(),
        workers,
        out,
        resolved: file,
    })
}

impl ScanSpec {
    /// Protocol for one scan point: signal carrier offset and medium length.
    pub fn point(&self, detuning: f64, zeta_l: f64) -> ProtocolConfig {
        let mut c = self.base.clone();
        c.signal.carrier_offset = detuning;
        let n = (zeta_l / self.zeta_step()).round() as usize + 1;
        c.grid = c.grid.truncated(n.min(c.grid.n_zeta()));
        c
    }

    pub fn zeta_step(&self) -> f64 {
        self.resolved.grid.zeta_step.unwrap_or(DEFAULT_ZETA_STEP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[protocol]
variant = "forward_echo"

[control]
kind = "sech_chirp"
omega0 = 10.0
tau = 1.0
mu = -20.0

[scan]
detuning = [0.0]
zeta_l = [2.0]
"#;

    fn parse(s: &str) -> Result<ScanSpec> {
        parse_config(s, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let spec = parse(MINIMAL).unwrap();
        let r = &spec.resolved;
        assert_eq!(r.line.cutoff, Some(46.0));
        assert_eq!(r.schedule.t1, Some(15.5));
        assert_eq!(r.schedule.t3, Some(62.0));
        assert_eq!(r.protocol.shelving, Some(Shelving::None));
        assert_eq!(r.signal.window, Some(5.0));
        assert_eq!(spec.base.grid.zeta_len(), 2.0);
        let step = spec.base.grid.delta[1] - spec.base.grid.delta[0];
        assert!(step < 2.0 * std::f64::consts::PI / 72.0);
        assert!((spec.base.grid.dt * 66.0 / 0.1 - 1.0).abs() < 1e-8, "{}", spec.base.grid.dt);
        // the resolved file round-trips
        let again = toml::to_string(r).unwrap();
        assert_eq!(parse(&again).unwrap().base, spec.base);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let text = MINIMAL.replace("mu = -20.0", "mu = -20.0\nchirp = 3");
        match parse(&text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 10, "{message}");
                assert!(message.contains("chirp"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schedule_mismatch_is_rejected() {
        let text = format!("{MINIMAL}\n[schedule]\nt1 = 15.5\nt2 = 46.5\nt3 = 63.0\n");
        assert!(matches!(parse(&text), Err(Error::Schedule(_))));
    }

    #[test]
    fn long_backward_axes() {
        let text = MINIMAL
            .replace("forward_echo", "backward_echo")
            .replace("zeta_l = [2.0]", "zeta_l = { start = 0.4, stop = 8.0, count = 20 }");
        let spec = parse(&text).unwrap();
        assert_eq!(spec.zeta_l.len(), 20);
        assert!((spec.zeta_l[19] - 8.0).abs() < 1e-12);
        assert_eq!(spec.base.shelving, Shelving::IdealSwap);
        let p = spec.point(0.0, 1.2);
        assert_eq!(p.grid.n_zeta(), 13);
    }

    #[test]
    fn axis_must_be_monotone() {
        let text = MINIMAL.replace("detuning = [0.0]", "detuning = [0.0, -1.0, 2.0]");
        assert!(matches!(parse(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("zeta_l = [2.0]", "zeta_l = []");
        assert!(matches!(parse(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("zeta_l = [2.0]", "zeta_l = [2.05]");
        assert!(matches!(parse(&text), Err(Error::Config(_))));
    }
}

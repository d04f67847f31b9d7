//! Run configuration: defaults, then a `key value` config file, then
//! `CPPROT_*` environment variables and command-line flags on top.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cpprot::cpp::Mode;
use cpprot::net::{datasets, parse_topology, Topology};
use cpprot::RtParams64;

/// Where the network comes from. `builtin:<name>` selects a bundled topology.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    File(PathBuf),
    Builtin(String),
}

impl TopologySource {
    pub fn parse(s: &str) -> Self {
        match s.strip_prefix("builtin:") {
            Some(name) => TopologySource::Builtin(name.to_string()),
            None => TopologySource::File(PathBuf::from(s)),
        }
    }

    pub fn load(&self) -> Result<Topology> {
        match self {
            TopologySource::Builtin(name) => {
                datasets::by_name(name).with_context(|| format!("no bundled topology named `{name}`"))
            }
            TopologySource::File(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read topology file {}", path.display()))?;
                parse_topology(&text).with_context(|| format!("bad topology file {}", path.display()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemandSource {
    /// One unit between every node pair.
    Uniform,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub topology: Option<TopologySource>,
    pub demands: DemandSource,
    /// Candidate path pairs per demand.
    pub k: usize,
    pub mode: Mode,
    pub rt: RtParams64,
    pub x_list: Vec<f64>,
    /// Branch-and-bound node budget for every ILP solve.
    pub budget: u64,
    pub seed: u64,
    pub slots: usize,
    pub max_hops: usize,
    pub max_cycles: usize,
    pub export_lp: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            topology: None,
            demands: DemandSource::Uniform,
            k: 5,
            mode: Mode::Strict,
            rt: RtParams64::default(),
            x_list: vec![0.5, 1.0, 5.0, 10.0],
            budget: 3000,
            seed: 1,
            slots: 64,
            max_hops: cpprot::pcycle::DEFAULT_MAX_HOPS,
            max_cycles: cpprot::pcycle::DEFAULT_MAX_COUNT,
            export_lp: false,
            out: PathBuf::from("cpprot-out"),
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("expected a boolean, got `{v}`"),
    }
}

pub fn parse_x_list(v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad X value `{s}`")))
        .collect()
}

impl RunConfig {
    /// Applies one `key value` setting. Relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let num = |what: &str| -> Result<f64> { value.parse().with_context(|| format!("bad {what} `{value}`")) };
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "topology" => {
                self.topology = Some(match TopologySource::parse(value) {
                    TopologySource::File(p) => TopologySource::File(path(&p.to_string_lossy())),
                    b => b,
                })
            }
            "demands" => {
                self.demands = if value == "uniform" {
                    DemandSource::Uniform
                } else {
                    DemandSource::File(path(value))
                }
            }
            "k" => self.k = value.parse().with_context(|| format!("bad k `{value}`"))?,
            "mode" => self.mode = value.parse().map_err(anyhow::Error::msg)?,
            "F" => self.rt.f = num("F")?,
            "M" => self.rt.m = num("M")?,
            "X" => self.rt.x = num("X")?,
            "S" => self.rt.s = num("S")?,
            "ms-per-km" => self.rt.ms_per_km = num("ms-per-km")?,
            "x-list" => self.x_list = parse_x_list(value)?,
            "budget" => self.budget = value.parse().with_context(|| format!("bad budget `{value}`"))?,
            "seed" => self.seed = value.parse().with_context(|| format!("bad seed `{value}`"))?,
            "slots" => self.slots = value.parse().with_context(|| format!("bad slots `{value}`"))?,
            "max-hops" => self.max_hops = value.parse().with_context(|| format!("bad max-hops `{value}`"))?,
            "max-cycles" => self.max_cycles = value.parse().with_context(|| format!("bad max-cycles `{value}`"))?,
            "export-lp" => self.export_lp = parse_bool(value)?,
            "out" => self.out = path(value),
            _ => bail!("unknown setting `{key}`"),
        }
        Ok(())
    }

    /// Reads a config file: one `key value` per line, `#` starts a comment.
    pub fn apply_file(&mut self, file: &Path) -> Result<()> {
        let text = fs::read_to_string(file).with_context(|| format!("cannot read config file {}", file.display()))?;
        let base = file.parent().unwrap_or(Path::new("."));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            self.set(key, value.trim(), base)
                .with_context(|| format!("{}:{}", file.display(), i + 1))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        match &self.topology {
            None => bail!("no topology given (use --topology, CPPROT_TOPOLOGY or a config file)"),
            Some(TopologySource::File(p)) if !p.is_file() => bail!("topology file {} does not exist", p.display()),
            _ => {}
        }
        if let DemandSource::File(p) = &self.demands {
            if !p.is_file() {
                bail!("demand file {} does not exist", p.display());
            }
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.x_list.is_empty() || self.x_list.iter().any(|&x| !(x > 0.0)) {
            bail!("the X list must be non-empty and positive");
        }
        if !self.rt.is_valid() {
            bail!("restoration-time parameters must be non-negative");
        }
        if self.slots < 8 {
            bail!("need at least 8 slots");
        }
        if self.max_hops < 3 {
            bail!("max-hops must be at least 3");
        }
        Ok(())
    }

    /// The settings as a config file that [`RunConfig::apply_file`] reads back.
    pub fn to_text(&self) -> String {
        let topo = match &self.topology {
            Some(TopologySource::File(p)) => p.display().to_string(),
            Some(TopologySource::Builtin(n)) => format!("builtin:{n}"),
            None => String::new(),
        };
        let demands = match &self.demands {
            DemandSource::Uniform => "uniform".to_string(),
            DemandSource::File(p) => p.display().to_string(),
        };
        let xs: Vec<String> = self.x_list.iter().map(|x| x.to_string()).collect();
        format!(
            "topology {topo}\ndemands {demands}\nk {}\nmode {}\nF {}\nM {}\nX {}\nS {}\nms-per-km {}\nx-list {}\nbudget {}\nseed {}\nslots {}\nmax-hops {}\nmax-cycles {}\nexport-lp {}\nout {}\n",
            self.k,
            self.mode,
            self.rt.f,
            self.rt.m,
            self.rt.x,
            self.rt.s,
            self.rt.ms_per_km,
            xs.join(","),
            self.budget,
            self.seed,
            self.slots,
            self.max_hops,
            self.max_cycles,
            self.export_lp,
            self.out.display()
        )
    }
}

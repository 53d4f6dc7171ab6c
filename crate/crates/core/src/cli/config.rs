//! Plain `key=value` run configuration.
//!
//! Lines are `key=value` pairs, `#` starts a comment, and `[section]` headers
//! switch the active section. Top-level keys come before the first header.
//! Every problem found is reported with its line number.

use std::collections::HashMap;
use std::fmt;

use crate::integrator::{IntegratorOptions, Method};
use crate::params::{Constants, FourierSeries, ParameterSchedule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number; 0 for problems not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// All problems found in one configuration text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub q: f64,
    pub p: f64,
    pub g: f64,
    pub pi: f64,
    /// Defaults to one period.
    pub t_end: Option<f64>,
    /// Number of output intervals.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitConfig {
    pub g_guess: Option<f64>,
    pub pi_guess: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HannayConfig {
    pub i_bar: f64,
    pub n_t: usize,
    pub n_phi: usize,
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetConfig {
    pub n: Vec<u32>,
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub epsilon: Vec<f64>,
    pub omega: Vec<f64>,
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schedule: ParameterSchedule,
    pub constants: Constants,
    pub integrator: IntegratorOptions,
    pub simulate: SimulateConfig,
    pub orbit: OrbitConfig,
    pub hannay: HannayConfig,
    pub floquet: FloquetConfig,
    pub sweep: SweepConfig,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["family", "epsilon", "omega", "hbar"]),
    ("integrator", &["method", "tol", "step", "max_steps", "max_step"]),
    ("fourier", &["period", "a_cos", "a_sin", "b_cos", "b_sin", "c_cos", "c_sin"]),
    ("simulate", &["q", "p", "G", "Pi", "t_end", "samples"]),
    ("orbit", &["G_guess", "Pi_guess", "samples"]),
    ("hannay", &["I_bar", "n_t", "n_phi", "ensemble"]),
    ("floquet", &["n", "ensemble"]),
    ("sweep", &["epsilon", "omega", "ensemble"]),
];

fn section_keys(name: &str) -> Option<&'static [&'static str]> {
    SECTIONS.iter().find(|(s, _)| *s == name).map(|(_, k)| *k)
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Reader {
    entries: HashMap<(String, String), Entry>,
    headers: HashMap<String, usize>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn scan(text: &str) -> Self {
        let mut r = Self::default();
        let mut section: Option<String> = Some(String::new());
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    r.error(line, format!("malformed section header '{content}'"));
                    section = None;
                    continue;
                };
                let name = name.trim();
                if name.is_empty() || section_keys(name).is_none() {
                    r.error(line, format!("unknown section [{name}]"));
                    section = None;
                } else if let Some(first) = r.headers.get(name) {
                    let first = *first;
                    r.error(line, format!("duplicate section [{name}] (first on line {first})"));
                    section = Some(name.to_string());
                } else {
                    r.headers.insert(name.to_string(), line);
                    section = Some(name.to_string());
                }
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                r.error(line, format!("expected key=value, got '{content}'"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = &section else {
                continue;
            };
            let known = section_keys(sec).unwrap_or(&[]);
            if !known.contains(&key) {
                let msg = if sec.is_empty() {
                    format!("unknown key '{key}'")
                } else {
                    format!("unknown key '{key}' in section [{sec}]")
                };
                r.error(line, msg);
                continue;
            }
            let slot = (sec.clone(), key.to_string());
            if let Some(prev) = r.entries.get(&slot) {
                let msg = format!(
                    "duplicate key '{}' (first set on line {})",
                    qualified(sec, key),
                    prev.line
                );
                r.error(line, msg);
                continue;
            }
            r.entries.insert(
                slot,
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        r
    }

    fn error(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| (e.value.as_str(), e.line))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.raw(section, key).map_or(0, |(_, l)| l)
    }

    fn has_section(&self, section: &str) -> bool {
        self.headers.contains_key(section)
    }

    fn f64(&mut self, section: &str, key: &str) -> Option<f64> {
        let (value, line) = self.raw(section, key)?;
        match value.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                let msg = format!("malformed number for {}: '{value}'", qualified(section, key));
                self.error(line, msg);
                None
            }
        }
    }

    fn usize(&mut self, section: &str, key: &str) -> Option<usize> {
        let (value, line) = self.raw(section, key)?;
        match value.parse::<usize>() {
            Ok(x) => Some(x),
            Err(_) => {
                let msg = format!(
                    "malformed non-negative integer for {}: '{value}'",
                    qualified(section, key)
                );
                self.error(line, msg);
                None
            }
        }
    }

    fn f64_list(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let (value, line) = self.raw(section, key)?;
        let value = value.to_string();
        let mut out = Vec::new();
        for item in value.split(',').map(str::trim) {
            if item.is_empty() && value.trim().is_empty() {
                break;
            }
            match item.parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    let msg = format!("malformed number in {}: '{item}'", qualified(section, key));
                    self.error(line, msg);
                    return None;
                }
            }
        }
        Some(out)
    }

    fn u32_list(&mut self, section: &str, key: &str) -> Option<Vec<u32>> {
        let (value, line) = self.raw(section, key)?;
        let value = value.to_string();
        let mut out = Vec::new();
        for item in value.split(',').map(str::trim) {
            match item.parse::<u32>() {
                Ok(x) => out.push(x),
                Err(_) => {
                    let msg = format!(
                        "malformed non-negative integer in {}: '{item}'",
                        qualified(section, key)
                    );
                    self.error(line, msg);
                    return None;
                }
            }
        }
        Some(out)
    }

    fn check(&mut self, ok: bool, section: &str, key: &str, message: &str) {
        if !ok {
            let line = self.line_of(section, key);
            self.error(line, message.to_string());
        }
    }
}

fn series(r: &mut Reader, cos_key: &str, sin_key: &str, constant: f64) -> FourierSeries {
    FourierSeries {
        cos: r.f64_list("fourier", cos_key).unwrap_or_else(|| vec![constant]),
        sin: r.f64_list("fourier", sin_key).unwrap_or_default(),
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut r = Reader::scan(text);

    // schedule
    let family = r.raw("", "family").map(|(v, l)| (v.to_string(), l));
    let fourier = match &family {
        None => false,
        Some((v, _)) if v == "standard" => false,
        Some((v, _)) if v == "fourier" => true,
        Some((v, l)) => {
            r.error(*l, format!("family must be 'standard' or 'fourier', got '{v}'"));
            false
        }
    };
    let epsilon = r.f64("", "epsilon").unwrap_or(0.0);
    let omega = r.f64("", "omega").unwrap_or(1.0);
    let schedule = if fourier {
        for key in ["epsilon", "omega"] {
            if r.raw("", key).is_some() {
                let line = r.line_of("", key);
                r.error(line, format!("{key} applies only to the standard family"));
            }
        }
        let period = r.f64("fourier", "period");
        if period.is_none() && r.raw("fourier", "period").is_none() {
            let line = r.headers.get("fourier").copied().unwrap_or(0);
            r.error(line, "family=fourier requires fourier.period".into());
        }
        let a = series(&mut r, "a_cos", "a_sin", 1.0);
        let b = series(&mut r, "b_cos", "b_sin", 1.0);
        let c = series(&mut r, "c_cos", "c_sin", 0.0);
        match period {
            Some(p) if p > 0.0 => match ParameterSchedule::fourier(p, a, b, c) {
                Ok(s) => Some(s),
                Err(e) => {
                    let line = r.headers.get("fourier").copied().unwrap_or(0);
                    r.error(line, e.to_string());
                    None
                }
            },
            Some(_) => {
                r.check(false, "fourier", "period", "period must be > 0");
                None
            }
            None => None,
        }
    } else {
        if r.has_section("fourier") {
            let line = r.headers["fourier"];
            r.error(line, "[fourier] requires family=fourier".into());
        }
        r.check(epsilon < 1.0, "", "epsilon", "epsilon must be < 1");
        r.check(epsilon >= 0.0, "", "epsilon", "epsilon must be >= 0");
        r.check(omega > 0.0, "", "omega", "omega must be > 0");
        ParameterSchedule::standard(epsilon, omega).ok()
    };

    let hbar = r.f64("", "hbar").unwrap_or(1.0);
    r.check(hbar > 0.0, "", "hbar", "hbar must be > 0");

    // integrator
    let method = r.raw("integrator", "method").map(|(v, l)| (v.to_string(), l));
    let tol = r.f64("integrator", "tol").unwrap_or(1e-12);
    let step = r.f64("integrator", "step").unwrap_or(1e-2);
    r.check(tol > 0.0, "integrator", "tol", "tol must be > 0");
    r.check(step > 0.0, "integrator", "step", "step must be > 0");
    let mut integrator = match method {
        Some((m, _)) if m == "rk4" => IntegratorOptions::rk4(step),
        Some((m, _)) if m == "rk45" => IntegratorOptions::rk45(tol),
        None => IntegratorOptions::rk45(tol),
        Some((m, l)) => {
            r.error(l, format!("method must be 'rk45' or 'rk4', got '{m}'"));
            IntegratorOptions::rk45(tol)
        }
    };
    if let Some(n) = r.usize("integrator", "max_steps") {
        r.check(n > 0, "integrator", "max_steps", "max_steps must be > 0");
        integrator.max_steps = n;
    }
    if let Some(h) = r.f64("integrator", "max_step") {
        r.check(h > 0.0, "integrator", "max_step", "max_step must be > 0");
        integrator.max_step = h;
    }
    if let Method::Rk4 { .. } = integrator.method {
        if r.raw("integrator", "tol").is_some() {
            let line = r.line_of("integrator", "tol");
            r.error(line, "tol applies only to method=rk45".into());
        }
    }

    // simulate
    let simulate = SimulateConfig {
        q: r.f64("simulate", "q").unwrap_or(1.0),
        p: r.f64("simulate", "p").unwrap_or(0.0),
        g: r.f64("simulate", "G").unwrap_or(0.5),
        pi: r.f64("simulate", "Pi").unwrap_or(0.0),
        t_end: r.f64("simulate", "t_end"),
        samples: r.usize("simulate", "samples").unwrap_or(100),
    };
    r.check(simulate.g > 0.0, "simulate", "G", "G must be > 0");
    r.check(
        simulate.t_end.is_none_or(|t| t > 0.0),
        "simulate",
        "t_end",
        "t_end must be > 0",
    );
    r.check(simulate.samples >= 1, "simulate", "samples", "samples must be >= 1");

    // orbit
    let orbit = OrbitConfig {
        g_guess: r.f64("orbit", "G_guess"),
        pi_guess: r.f64("orbit", "Pi_guess"),
        samples: r.usize("orbit", "samples").unwrap_or(1024),
    };
    r.check(
        orbit.g_guess.is_none_or(|g| g > 0.0),
        "orbit",
        "G_guess",
        "G_guess must be > 0",
    );
    r.check(orbit.samples >= 2, "orbit", "samples", "samples must be >= 2");

    // hannay
    let hannay = HannayConfig {
        i_bar: r.f64("hannay", "I_bar").unwrap_or(1.0),
        n_t: r.usize("hannay", "n_t").unwrap_or(512),
        n_phi: r.usize("hannay", "n_phi").unwrap_or(512),
        ensemble: r.usize("hannay", "ensemble").unwrap_or(256),
    };
    r.check(hannay.i_bar > 0.0, "hannay", "I_bar", "I_bar must be > 0");
    for (key, n) in [("n_t", hannay.n_t), ("n_phi", hannay.n_phi)] {
        r.check(
            n >= 64 && n.is_multiple_of(2),
            "hannay",
            key,
            &format!("{key} must be even and >= 64"),
        );
    }
    r.check(hannay.ensemble >= 64, "hannay", "ensemble", "ensemble must be >= 64");

    // floquet
    let floquet = FloquetConfig {
        n: r.u32_list("floquet", "n").unwrap_or_else(|| vec![0]),
        ensemble: r.usize("floquet", "ensemble").unwrap_or(256),
    };
    r.check(floquet.ensemble >= 8, "floquet", "ensemble", "ensemble must be >= 8");

    // sweep
    let sweep = SweepConfig {
        epsilon: r
            .f64_list("sweep", "epsilon")
            .unwrap_or_else(|| vec![0.02, 0.05, 0.1]),
        omega: r.f64_list("sweep", "omega").unwrap_or_else(|| vec![1.0]),
        ensemble: r.usize("sweep", "ensemble").unwrap_or(256),
    };
    r.check(!sweep.epsilon.is_empty(), "sweep", "epsilon", "sweep.epsilon must not be empty");
    r.check(!sweep.omega.is_empty(), "sweep", "omega", "sweep.omega must not be empty");
    r.check(
        sweep.epsilon.iter().all(|e| (0.0..1.0).contains(e)),
        "sweep",
        "epsilon",
        "every sweep epsilon must satisfy 0 <= epsilon < 1",
    );
    r.check(
        sweep.omega.iter().all(|w| *w > 0.0),
        "sweep",
        "omega",
        "every sweep omega must be > 0",
    );
    r.check(sweep.ensemble >= 64, "sweep", "ensemble", "ensemble must be >= 64");

    let constants = Constants::new(hbar);
    match (schedule, constants) {
        (Some(schedule), Ok(constants)) if r.errors.is_empty() => Ok(RunConfig {
            schedule,
            constants,
            integrator,
            simulate,
            orbit,
            hannay,
            floquet,
            sweep,
        }),
        _ => {
            let mut errors = r.errors;
            if errors.is_empty() {
                errors.push(ConfigError {
                    line: 0,
                    message: "invalid configuration".into(),
                });
            }
            errors.sort_by_key(|e| e.line);
            Err(ConfigErrors(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<ConfigError> {
        parse_config(text).unwrap_err().0
    }

    #[test]
    fn standard_family_with_defaults() {
        let c = parse_config("epsilon=0.1\nomega=1.0").unwrap();
        assert_eq!(c.schedule, ParameterSchedule::standard(0.1, 1.0).unwrap());
        assert_eq!(c.constants.hbar, 1.0);
        assert_eq!(c.floquet.n, vec![0]);
        assert_eq!(c.integrator, IntegratorOptions::rk45(1e-12));
    }

    #[test]
    fn empty_config_is_undriven() {
        let c = parse_config("# nothing\n\n").unwrap();
        assert_eq!(c.schedule, ParameterSchedule::standard(0.0, 1.0).unwrap());
    }

    #[test]
    fn epsilon_out_of_range() {
        let e = errors("epsilon=1.5");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].line, 1);
        assert_eq!(e[0].message, "epsilon must be < 1");
        assert_eq!(e[0].to_string(), "line 1: epsilon must be < 1");
    }

    #[test]
    fn multi_state_floquet_run() {
        let c = parse_config("hbar=2.0\n[floquet]\nn=0,1,2").unwrap();
        assert_eq!(c.constants.hbar, 2.0);
        assert_eq!(c.floquet.n, vec![0, 1, 2]);
    }

    #[test]
    fn collects_every_error() {
        let text = "epsilon=abc\nbogus=1\n[nowhere]\nx=1\n[hannay]\nn_t=63\nI_bar=1\nI_bar=2\nnot a pair";
        let e = errors(text);
        let lines: Vec<usize> = e.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![1, 2, 3, 6, 8, 9]);
        assert!(e[0].message.contains("malformed number"));
        assert!(e[1].message.contains("unknown key 'bogus'"));
        assert!(e[2].message.contains("unknown section"));
        assert!(e[4].message.contains("duplicate key"));
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  epsilon = 0.05   # drive\n[integrator] # rk4 run\nmethod = rk4\nstep=0.02\n").unwrap();
        assert_eq!(c.integrator.method, Method::Rk4 { step: 0.02 });
    }

    #[test]
    fn fourier_family() {
        let text = "family=fourier\n[fourier]\nperiod=3.0\na_cos=1.0,0.1\nb_cos=1.2\nc_cos=0,0,0.1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.schedule.period(), 3.0);
        assert!(c.schedule.standard_family().is_none());
        let bad = errors("family=fourier\n[fourier]\nperiod=3\na_cos=0.1\nc_cos=1\n");
        assert_eq!(bad[0].line, 2);
        assert!(errors("[fourier]\nperiod=1")[0].message.contains("family=fourier"));
        assert!(errors("family=fourier\nepsilon=0.1\n[fourier]\nperiod=1")[0]
            .message
            .contains("standard family"));
    }

    #[test]
    fn sweep_lists() {
        let c = parse_config("[sweep]\nepsilon=0.01, 0.02\nomega=0.5,1,2").unwrap();
        assert_eq!(c.sweep.epsilon, vec![0.01, 0.02]);
        assert_eq!(c.sweep.omega, vec![0.5, 1.0, 2.0]);
        assert_eq!(errors("[sweep]\nepsilon=0.5,1.2")[0].line, 2);
    }

    #[test]
    fn non_finite_numbers_are_malformed() {
        let e = errors("hbar=inf\nomega=NaN");
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|e| e.message.contains("malformed")));
    }
}

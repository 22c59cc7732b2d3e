//! Run configuration: flat `key=value` file merged under command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use signlab_core::eigenforms::cache::CACHE_DIR_ENV;
use signlab_core::eigenforms::FormId;
use signlab_core::signlab::WindowMode;
use signlab_core::{Error, Result};

/// Which sign sequence a scan reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Series {
    Lambda,
    CPrime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub const SUITES: [&str; 5] = ["numtheory", "qseries", "eigenforms", "gmf", "signlab"];

/// Unparsed settings, from flags or from a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawSettings {
    pub form: Option<String>,
    pub limit: Option<String>,
    pub power: Option<String>,
    pub x0: Option<String>,
    pub windows: Option<String>,
    pub window_mode: Option<String>,
    pub series: Option<String>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub cache_dir: Option<String>,
    pub threads: Option<String>,
    pub svg: Option<String>,
    pub suite: Option<String>,
}

impl RawSettings {
    /// Fields set in `self` win over `fallback`.
    pub fn over(self, fallback: RawSettings) -> RawSettings {
        RawSettings {
            form: self.form.or(fallback.form),
            limit: self.limit.or(fallback.limit),
            power: self.power.or(fallback.power),
            x0: self.x0.or(fallback.x0),
            windows: self.windows.or(fallback.windows),
            window_mode: self.window_mode.or(fallback.window_mode),
            series: self.series.or(fallback.series),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            cache_dir: self.cache_dir.or(fallback.cache_dir),
            threads: self.threads.or(fallback.threads),
            svg: self.svg.or(fallback.svg),
            suite: self.suite.or(fallback.suite),
        }
    }
}

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
/// Keys are the long flag names without dashes.
pub fn parse_config_text(text: &str) -> Result<RawSettings> {
    let mut seen = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if seen.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Usage(format!(
                "config line {}: duplicate key `{key}`",
                i + 1
            )));
        }
    }
    let mut s = RawSettings::default();
    for (key, value) in seen {
        let slot = match key.as_str() {
            "form" => &mut s.form,
            "limit" => &mut s.limit,
            "power" => &mut s.power,
            "x0" => &mut s.x0,
            "windows" => &mut s.windows,
            "window-mode" => &mut s.window_mode,
            "series" => &mut s.series,
            "out" => &mut s.out,
            "format" => &mut s.format,
            "cache-dir" => &mut s.cache_dir,
            "threads" => &mut s.threads,
            "svg" => &mut s.svg,
            "suite" => &mut s.suite,
            _ => return Err(Error::Usage(format!("unknown config key `{key}`"))),
        };
        *slot = Some(value);
    }
    Ok(s)
}

pub fn read_config_file(path: &Path) -> Result<RawSettings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Validated settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub form: FormId,
    /// Whether a form was named rather than defaulted.
    pub form_given: bool,
    pub limit: Option<u64>,
    pub power: u32,
    pub x0: f64,
    pub windows: u32,
    pub window_mode: WindowMode,
    pub series: Series,
    pub out: PathBuf,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
    pub threads: usize,
    pub svg: bool,
    pub suites: Vec<&'static str>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Usage(format!("--{key}: cannot parse `{v}`")))
}

fn positive_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Usage(format!("--{key} must be positive, got `{v}`")));
    }
    Ok(x)
}

fn positive<T>(key: &str, v: &str) -> Result<T>
where
    T: std::str::FromStr + PartialOrd + Default,
{
    let x: T = parse_num(key, v)?;
    if x <= T::default() {
        return Err(Error::Usage(format!("--{key} must be positive, got `{v}`")));
    }
    Ok(x)
}

/// `dyadic`, `power:<a>` for `h = x^a`, or `expsqrt:<A>` for `h = x/e^{A√log x}`.
pub fn parse_window_mode(v: &str) -> Result<WindowMode> {
    let bad = || {
        Error::Usage(format!(
            "--window-mode: expected dyadic, power:<a> or expsqrt:<A>, got `{v}`"
        ))
    };
    if v == "dyadic" {
        return Ok(WindowMode::Dyadic);
    }
    let (kind, arg) = v.split_once(':').ok_or_else(bad)?;
    let a: f64 = arg.parse().map_err(|_| bad())?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(bad());
    }
    match kind {
        "power" if a <= 1.0 => Ok(WindowMode::Power(a)),
        "expsqrt" => Ok(WindowMode::ExpSqrt(a)),
        _ => Err(bad()),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Usage(format!(
            "--{key}: expected true or false, got `{v}`"
        ))),
    }
}

impl RunConfig {
    /// `env_cache` is the value of the cache environment variable, if set.
    pub fn resolve(raw: RawSettings, env_cache: Option<String>) -> Result<RunConfig> {
        let form_given = raw.form.is_some();
        let form = match raw.form.as_deref() {
            Some(f) => f.parse::<FormId>()?,
            None => FormId::Delta,
        };
        let limit = raw
            .limit
            .as_deref()
            .map(|v| positive::<u64>("limit", v))
            .transpose()?;
        let power = match raw.power.as_deref() {
            Some(v) => parse_num::<u32>("power", v)?,
            None => 2,
        };
        if !(1..=4).contains(&power) {
            return Err(Error::Usage(format!(
                "--power must be in 1..=4, got {power}"
            )));
        }
        let x0 = raw
            .x0
            .as_deref()
            .map(|v| positive_f64("x0", v))
            .transpose()?
            .unwrap_or(16.0);
        let windows = raw
            .windows
            .as_deref()
            .map(|v| positive::<u32>("windows", v))
            .transpose()?
            .unwrap_or(8);
        let window_mode = raw
            .window_mode
            .as_deref()
            .map(parse_window_mode)
            .transpose()?
            .unwrap_or(WindowMode::Dyadic);
        let series = match raw.series.as_deref() {
            None | Some("lambda") => Series::Lambda,
            Some("cprime") => Series::CPrime,
            Some(v) => {
                return Err(Error::Usage(format!(
                    "--series: expected lambda or cprime, got `{v}`"
                )))
            }
        };
        let out = PathBuf::from(raw.out.unwrap_or_else(|| ".".into()));
        let format = match raw.format.as_deref() {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(v) => {
                return Err(Error::Usage(format!(
                    "--format: expected csv or json, got `{v}`"
                )))
            }
        };
        let cache_dir = raw
            .cache_dir
            .or(env_cache.filter(|s| !s.is_empty()))
            .map(PathBuf::from)
            .or_else(|| Some(out.join("cache")));
        let threads = match raw.threads.as_deref() {
            Some(v) => positive::<usize>("threads", v)?,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let svg = raw
            .svg
            .as_deref()
            .map(|v| parse_bool("svg", v))
            .transpose()?
            .unwrap_or(false);
        let suites = match raw.suite.as_deref() {
            None | Some("all") => SUITES.to_vec(),
            Some(list) => {
                let mut picked = Vec::new();
                for name in list.split(',').map(str::trim) {
                    let s = SUITES.iter().find(|s| **s == name).ok_or_else(|| {
                        Error::Usage(format!(
                            "unknown suite `{name}`; known: {}",
                            SUITES.join(", ")
                        ))
                    })?;
                    if !picked.contains(s) {
                        picked.push(*s);
                    }
                }
                picked
            }
        };
        Ok(RunConfig {
            form,
            form_given,
            limit,
            power,
            x0,
            windows,
            window_mode,
            series,
            out,
            format,
            cache_dir,
            threads,
            svg,
            suites,
        })
    }

    pub fn from_env(raw: RawSettings) -> Result<RunConfig> {
        RunConfig::resolve(raw, std::env::var(CACHE_DIR_ENV).ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let s =
            parse_config_text("# run\nform = n11\nwindow_mode=power:0.5  # comment\n\nlimit=100\n")
                .unwrap();
        assert_eq!(s.form.as_deref(), Some("n11"));
        assert_eq!(s.window_mode.as_deref(), Some("power:0.5"));
        assert_eq!(s.limit.as_deref(), Some("100"));
        assert!(parse_config_text("form").is_err());
        assert!(parse_config_text("colour=blue").is_err());
        assert!(parse_config_text("form=a\nform=b").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("form=n11\nwindows=3\nthreads=2").unwrap();
        let flags = RawSettings {
            form: Some("n14".into()),
            ..Default::default()
        };
        let c = RunConfig::resolve(flags.over(file), None).unwrap();
        assert_eq!(c.form, FormId::N14);
        assert_eq!(c.windows, 3);
        assert_eq!(c.threads, 2);
    }

    #[test]
    fn defaults_and_cache_precedence() {
        let c = RunConfig::resolve(RawSettings::default(), None).unwrap();
        assert_eq!(c.form, FormId::Delta);
        assert!(!c.form_given);
        assert_eq!((c.power, c.x0, c.windows), (2, 16.0, 8));
        assert_eq!(c.cache_dir, Some(PathBuf::from("./cache")));
        assert_eq!(c.suites.len(), 5);
        let c = RunConfig::resolve(RawSettings::default(), Some("/tmp/env".into())).unwrap();
        assert_eq!(c.cache_dir, Some(PathBuf::from("/tmp/env")));
        let flag = RawSettings {
            cache_dir: Some("/tmp/flag".into()),
            ..Default::default()
        };
        let c = RunConfig::resolve(flag, Some("/tmp/env".into())).unwrap();
        assert_eq!(c.cache_dir, Some(PathBuf::from("/tmp/flag")));
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let bad = |f: fn(&mut RawSettings)| {
            let mut s = RawSettings::default();
            f(&mut s);
            RunConfig::resolve(s, None).unwrap_err()
        };
        assert!(matches!(
            bad(|s| s.form = Some("unknown".into())),
            Error::UnknownForm(_)
        ));
        assert!(matches!(
            bad(|s| s.windows = Some("0".into())),
            Error::Usage(_)
        ));
        assert!(matches!(
            bad(|s| s.power = Some("5".into())),
            Error::Usage(_)
        ));
        assert!(matches!(bad(|s| s.x0 = Some("-1".into())), Error::Usage(_)));
        assert!(matches!(
            bad(|s| s.threads = Some("0".into())),
            Error::Usage(_)
        ));
        assert!(matches!(
            bad(|s| s.suite = Some("gmf,nope".into())),
            Error::Usage(_)
        ));
        assert!(matches!(
            bad(|s| s.format = Some("xml".into())),
            Error::Usage(_)
        ));
    }

    #[test]
    fn window_modes() {
        assert_eq!(parse_window_mode("dyadic").unwrap(), WindowMode::Dyadic);
        assert_eq!(
            parse_window_mode("power:0.8").unwrap(),
            WindowMode::Power(0.8)
        );
        assert_eq!(
            parse_window_mode("expsqrt:1.5").unwrap(),
            WindowMode::ExpSqrt(1.5)
        );
        for bad in ["power", "power:2", "expsqrt:-1", "linear:1", "power:x"] {
            assert!(parse_window_mode(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn suite_filter() {
        let s = RawSettings {
            suite: Some("gmf, gmf,numtheory".into()),
            ..Default::default()
        };
        assert_eq!(
            RunConfig::resolve(s, None).unwrap().suites,
            vec!["gmf", "numtheory"]
        );
    }
}

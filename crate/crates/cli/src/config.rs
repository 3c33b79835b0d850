//! Flat TOML scenario documents.
//!
//! Every key is optional and maps onto one field of [`SimConfig`]. Unknown
//! keys are rejected so typos do not silently fall back to defaults.
//!
//! ```toml
//! n_agents = 5
//! mode = "yfm"            # or "cs-oracle"
//! seed = 0                # initial conditions and noise
//! noise_seed = 0          # noise only, overrides seed
//! dt = 0.01
//! t_max = 200.0
//! H = 1.0
//! k = 20.0
//! beta = 0.4
//! L = 1.0
//! L_e = 1.0               # defaults to L
//! alpha_min = 0.005
//! Gamma = 0.0
//! v_floor = 1e-6
//! sigma = 1.0
//! sigma_q = 0.0
//! sigma_a = 0.0
//! box_size = 10.0
//! min_spacing = 0.5
//! speed_min = 0.5
//! speed_max = 2.0
//! heading_min = -3.141592653589793
//! heading_max = 3.141592653589793
//! sign_rule = "range-rate"        # or "quadrant"
//! heading_loop = "second-order"   # or "direct"
//! initial_states = [[0.0, 0.0, 1.0, 0.0, 0.0], [2.0, 0.0, 1.5, 0.3, 0.0]]
//! ```

use optiflock::{AgentState, HeadingLoop, Mode, SignRule, SimConfig};
use thiserror::Error;
use toml::{Table, Value};

pub const KEYS: [&str; 26] = [
    "n_agents",
    "mode",
    "seed",
    "noise_seed",
    "dt",
    "t_max",
    "H",
    "k",
    "beta",
    "L",
    "L_e",
    "alpha_min",
    "Gamma",
    "v_floor",
    "sigma",
    "sigma_q",
    "sigma_a",
    "box_size",
    "min_spacing",
    "speed_min",
    "speed_max",
    "heading_min",
    "heading_max",
    "sign_rule",
    "heading_loop",
    "initial_states",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: expected {expected}, got {got}")]
    Type {
        key: String,
        expected: &'static str,
        got: String,
    },
    #[error("malformed override `{0}` (expected key=value)")]
    Override(String),
    #[error(transparent)]
    Invalid(#[from] optiflock::Error),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Parse a document into a table without interpreting it.
pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::Syntax(e.message().to_string()))
}

/// Apply one `key=value` override. The value is read as a TOML value when it
/// parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    table.insert(key.to_string(), value);
    Ok(())
}

/// Parse a document. Unspecified keys keep their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    config_from_table(&parse_table(text)?)
}

fn type_name(v: &Value) -> String {
    match v {
        Value::String(s) => format!("string \"{s}\""),
        other => other.type_str().to_string(),
    }
}

fn float(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(ConfigError::Type {
            key: key.to_string(),
            expected: "a number",
            got: type_name(other),
        }),
    }
}

fn unsigned(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(ConfigError::Type {
            key: key.to_string(),
            expected: "a nonnegative integer",
            got: type_name(other),
        }),
    }
}

fn choice<T>(key: &str, v: &Value, options: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    let expected = "one of the documented names";
    let s = match v {
        Value::String(s) => s.to_ascii_lowercase().replace('_', "-"),
        other => {
            return Err(ConfigError::Type {
                key: key.to_string(),
                expected,
                got: type_name(other),
            })
        }
    };
    options
        .iter()
        .find(|(name, _)| *name == s)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::Type {
            key: key.to_string(),
            expected,
            got: type_name(v),
        })
}

fn states(key: &str, v: &Value) -> Result<Vec<AgentState>> {
    let bad = || ConfigError::Type {
        key: key.to_string(),
        expected: "an array of [x, y, v, theta, omega] arrays",
        got: type_name(v),
    };
    let rows = v.as_array().ok_or_else(bad)?;
    rows.iter()
        .map(|row| {
            let row = row.as_array().filter(|r| r.len() == 5).ok_or_else(bad)?;
            let f: Vec<f64> = row.iter().map(|x| float(key, x)).collect::<Result<_>>()?;
            Ok(AgentState::new(f[0], f[1], f[2], f[3], f[4]))
        })
        .collect()
}

/// Build a config from an already-parsed (and possibly overridden) table.
pub fn config_from_table(table: &Table) -> Result<SimConfig> {
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let mut c = SimConfig::default();
    if let Some(v) = table.get("seed") {
        c = c.with_seed(unsigned("seed", v)?);
    }
    for (key, v) in table {
        let p = &mut c.params;
        match key.as_str() {
            "n_agents" => c.n_agents = unsigned(key, v)? as usize,
            "mode" => {
                c.mode = choice(
                    key,
                    v,
                    &[
                        ("yfm", Mode::Yfm),
                        ("cs", Mode::CsOracle),
                        ("cs-oracle", Mode::CsOracle),
                    ],
                )?
            }
            "seed" => {}
            "noise_seed" => c.noise.seed = unsigned(key, v)?,
            "dt" => c.dt = float(key, v)?,
            "t_max" => c.t_max = float(key, v)?,
            "H" => p.coupling = float(key, v)?,
            "k" => p.heading_gain = float(key, v)?,
            "beta" => p.beta = float(key, v)?,
            "L" => p.length = float(key, v)?,
            "L_e" => p.assumed_length = Some(float(key, v)?),
            "alpha_min" => p.alpha_min = float(key, v)?,
            "Gamma" => p.occlusion = float(key, v)?,
            "v_floor" => p.v_floor = float(key, v)?,
            "sigma" => p.sigma = float(key, v)?,
            "sigma_q" => c.noise.sigma_q = float(key, v)?,
            "sigma_a" => c.noise.sigma_a = float(key, v)?,
            "box_size" => c.init.box_size = float(key, v)?,
            "min_spacing" => c.init.min_spacing = float(key, v)?,
            "speed_min" => c.init.speed_min = float(key, v)?,
            "speed_max" => c.init.speed_max = float(key, v)?,
            "heading_min" => c.init.heading_min = float(key, v)?,
            "heading_max" => c.init.heading_max = float(key, v)?,
            "sign_rule" => {
                p.sign_rule = choice(
                    key,
                    v,
                    &[
                        ("range-rate", SignRule::RangeRate),
                        ("quadrant", SignRule::Quadrant),
                    ],
                )?
            }
            "heading_loop" => {
                c.heading_loop = choice(
                    key,
                    v,
                    &[
                        ("second-order", HeadingLoop::SecondOrder),
                        ("direct", HeadingLoop::Direct),
                    ],
                )?
            }
            "initial_states" => c.init.explicit = Some(states(key, v)?),
            _ => unreachable!("filtered above"),
        }
    }
    // an explicit block fixes the swarm size unless n_agents says otherwise
    if let (Some(s), false) = (&c.init.explicit, table.contains_key("n_agents")) {
        c.n_agents = s.len();
    }
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let c = parse_config("").unwrap();
        assert_eq!(c, SimConfig::default());
        let p = &c.params;
        assert_eq!(
            (p.beta, p.coupling, p.heading_gain, p.length, p.alpha_min),
            (0.4, 1.0, 20.0, 1.0, 0.005)
        );
        assert_eq!(c.dt, 0.01);
    }

    #[test]
    fn single_key_changes_only_that_field() {
        let c = parse_config("k = 0.2").unwrap();
        let mut expected = SimConfig::default();
        expected.params.heading_gain = 0.2;
        assert_eq!(c, expected);
    }

    #[test]
    fn integers_are_accepted_for_reals() {
        assert_eq!(parse_config("L = 10").unwrap().params.length, 10.0);
    }

    #[test]
    fn type_error_names_the_key() {
        let e = parse_config("beta = \"x\"").unwrap_err().to_string();
        assert!(e.contains("`beta`"), "{e}");
        let e = parse_config("n_agents = 2.5").unwrap_err().to_string();
        assert!(e.contains("`n_agents`"), "{e}");
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("betta = 0.3").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(ref k) if k == "betta"));
        assert!(e.to_string().contains("betta"));
    }

    #[test]
    fn invariant_errors_name_the_field() {
        let e = parse_config("H = -1.0").unwrap_err().to_string();
        assert!(e.contains("H"), "{e}");
        let e = parse_config("dt = 0").unwrap_err().to_string();
        assert!(e.contains("dt"), "{e}");
        let e = parse_config("sigma_a = -0.1").unwrap_err().to_string();
        assert!(e.contains("sigma_a"), "{e}");
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(
            parse_config("k = = 2"),
            Err(ConfigError::Syntax(_))
        ));
    }

    #[test]
    fn seeds_and_names() {
        let c = parse_config("seed = 4\nnoise_seed = 9\nmode = \"cs-oracle\"\nsign_rule = \"quadrant\"\nheading_loop = \"direct\"").unwrap();
        assert_eq!((c.seed, c.noise.seed), (4, 9));
        assert_eq!(c.mode, Mode::CsOracle);
        assert_eq!(c.params.sign_rule, SignRule::Quadrant);
        assert_eq!(c.heading_loop, HeadingLoop::Direct);
        let c = parse_config("seed = 4").unwrap();
        assert_eq!((c.seed, c.noise.seed), (4, 4));
        assert!(parse_config("mode = \"boids\"")
            .unwrap_err()
            .to_string()
            .contains("`mode`"));
    }

    #[test]
    fn explicit_states_set_the_swarm_size() {
        let c =
            parse_config("initial_states = [[0, 0, 1, 0, 0], [2.0, 0.0, 1.5, 0.3, 0.0]]").unwrap();
        assert_eq!(c.n_agents, 2);
        assert_eq!(
            c.init.explicit.as_ref().unwrap()[1],
            AgentState::new(2.0, 0.0, 1.5, 0.3, 0.0)
        );
        let e = parse_config("initial_states = [[0, 0, 1, 0]]")
            .unwrap_err()
            .to_string();
        assert!(e.contains("initial_states"), "{e}");
        let e = parse_config("n_agents = 3\ninitial_states = [[0, 0, 1, 0, 0]]")
            .unwrap_err()
            .to_string();
        assert!(e.contains("initial_states"), "{e}");
    }

    #[test]
    fn overrides_win_and_fall_back_to_strings() {
        let mut t = parse_table("k = 20.0\nmode = \"yfm\"").unwrap();
        apply_override(&mut t, "k=0.2").unwrap();
        apply_override(&mut t, "mode=cs-oracle").unwrap();
        apply_override(&mut t, " L_e = 3 ").unwrap();
        let c = config_from_table(&t).unwrap();
        assert_eq!(c.params.heading_gain, 0.2);
        assert_eq!(c.mode, Mode::CsOracle);
        assert_eq!(c.params.assumed_length, Some(3.0));
        assert!(matches!(
            apply_override(&mut t, "novalue"),
            Err(ConfigError::Override(_))
        ));
        assert!(matches!(
            apply_override(&mut t, "=1"),
            Err(ConfigError::Override(_))
        ));
    }
}

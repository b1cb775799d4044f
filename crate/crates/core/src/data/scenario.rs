//! Scenario files: `key = value` lines describing the hubs, the market, the
//! exogenous series and the constraint settings.
//!
//! Energies are in kWh; any energy key may instead carry the `_mwh` suffix
//! (for example `b_max_mwh = 4`). Relative paths resolve against the
//! scenario file's directory.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::env::{CapacityMode, ExogenousSeries, HubParams, HubState, MarketParams, ParkEnv};
use crate::scalar::Scalar;

use super::kv::{bad_value, parse_bool, parse_kv};
use super::profile::{generate_series, ProfileSpec};
use super::series_io::{load_series, write_series};
use super::DataError;

/// Where the exogenous series comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesSource {
    Csv(PathBuf),
    Profile(PathBuf),
}

/// Parsed scenario settings before the environment is assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub hubs: usize,
    pub source: SeriesSource,
    /// Keep only the first `horizon` slots of the series.
    pub horizon: Option<usize>,
    pub demand_scale: f64,
    pub pv_scale: f64,
    /// Multiply demand and PV by the hub count as well.
    pub scale_with_hubs: bool,
    pub hub: HubParams<f64>,
    pub market: MarketParams<f64>,
    pub zeta: f64,
    pub lagrange: bool,
    pub mode: CapacityMode,
    /// Initial storage levels; half capacity when unset.
    pub initial_b: Option<f64>,
    pub initial_w: Option<f64>,
    pub initial_lambda_b: f64,
    pub initial_lambda_w: f64,
}

fn energy_key(key: &str) -> bool {
    matches!(
        key,
        "b_max"
            | "w_max"
            | "c_e_max"
            | "d_e_max"
            | "c_h_max"
            | "d_h_max"
            | "e_chp_max"
            | "h_chp_max"
            | "h_b_max"
            | "e_max"
            | "g_max"
            | "e_o_max"
            | "initial_b"
            | "initial_w"
    )
}

impl ScenarioConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, DataError> {
        let mut hubs = 1;
        let mut source = None;
        let mut cfg_horizon = None;
        let mut demand_scale = 1.0;
        let mut pv_scale = 1.0;
        let mut scale_with_hubs = false;
        let mut hub = HubParams::<f64>::default();
        let mut market = MarketParams::<f64>::default();
        let mut zeta = 1e-4;
        let mut lagrange = true;
        let mut mode = CapacityMode::Soft;
        let mut initial_b = None;
        let mut initial_w = None;
        let mut initial_lambda_b = 0.0;
        let mut initial_lambda_w = 0.0;

        for (line, raw_key, v) in parse_kv(text)? {
            let (key, factor) = match raw_key.strip_suffix("_mwh") {
                Some(k) if energy_key(k) => (k.to_string(), 1000.0),
                Some(_) => {
                    return Err(DataError::Syntax {
                        line,
                        reason: format!("{raw_key} is not an energy quantity"),
                    })
                }
                None => (raw_key.clone(), 1.0),
            };
            let num = || {
                v.parse::<f64>()
                    .map(|x| x * factor)
                    .map_err(|_| bad_value(line, &raw_key, &v))
            };
            let path = || {
                let p = PathBuf::from(&v);
                if p.is_absolute() {
                    p
                } else {
                    base_dir.join(p)
                }
            };
            match key.as_str() {
                "hubs" => hubs = v.parse().map_err(|_| bad_value(line, &key, &v))?,
                "series" | "profile" => {
                    if source.is_some() {
                        return Err(DataError::Syntax {
                            line,
                            reason: "only one of `series` and `profile` may be given".into(),
                        });
                    }
                    source = Some(if key == "series" {
                        SeriesSource::Csv(path())
                    } else {
                        SeriesSource::Profile(path())
                    });
                }
                "horizon" => cfg_horizon = Some(v.parse().map_err(|_| bad_value(line, &key, &v))?),
                "demand_scale" => demand_scale = num()?,
                "pv_scale" => pv_scale = num()?,
                "scale_with_hubs" => scale_with_hubs = parse_bool(line, &key, &v)?,
                "zeta" => zeta = num()?,
                "lagrange" => lagrange = parse_bool(line, &key, &v)?,
                "mode" => {
                    mode = match v.as_str() {
                        "soft" => CapacityMode::Soft,
                        "strict" => CapacityMode::Strict,
                        _ => return Err(bad_value(line, &key, &v)),
                    }
                }
                "initial_b" => initial_b = Some(num()?),
                "initial_w" => initial_w = Some(num()?),
                "initial_lambda_b" => initial_lambda_b = num()?,
                "initial_lambda_w" => initial_lambda_w = num()?,
                "eta_ce" => hub.eta_ce = num()?,
                "eta_de" => hub.eta_de = num()?,
                "eta_ch" => hub.eta_ch = num()?,
                "eta_dh" => hub.eta_dh = num()?,
                "eta_pg" => hub.eta_pg = num()?,
                "eta_hg" => hub.eta_hg = num()?,
                "eta_bg" => hub.eta_bg = num()?,
                "b_max" => hub.b_max = num()?,
                "w_max" => hub.w_max = num()?,
                "c_e_max" => hub.c_e_max = num()?,
                "d_e_max" => hub.d_e_max = num()?,
                "c_h_max" => hub.c_h_max = num()?,
                "d_h_max" => hub.d_h_max = num()?,
                "e_chp_max" => hub.e_chp_max = num()?,
                "h_chp_max" => hub.h_chp_max = num()?,
                "h_b_max" => hub.h_b_max = num()?,
                "e_max" => market.e_max = num()?,
                "g_max" => market.g_max = num()?,
                "e_o_max" => market.e_o_max = num()?,
                "b1" => market.b1 = num()?,
                "b2" => market.b2 = num()?,
                _ => {
                    return Err(DataError::Syntax {
                        line,
                        reason: format!("unknown scenario key {raw_key:?}"),
                    })
                }
            }
        }
        if hubs == 0 {
            return Err(DataError::InvalidScenario("hubs must be >= 1".into()));
        }
        let source =
            source.ok_or_else(|| DataError::InvalidScenario("a `series` or `profile` path is required".into()))?;
        Ok(Self {
            hubs,
            source,
            horizon: cfg_horizon,
            demand_scale,
            pv_scale,
            scale_with_hubs,
            hub,
            market,
            zeta,
            lagrange,
            mode,
            initial_b,
            initial_w,
            initial_lambda_b,
            initial_lambda_w,
        })
    }

    /// Loads or generates the series and assembles the environment.
    pub fn build<S: Scalar>(&self) -> Result<ParkEnv<S>, DataError> {
        let mut series: ExogenousSeries<S> = match &self.source {
            SeriesSource::Csv(p) => load_series(p)?,
            SeriesSource::Profile(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| DataError::Io {
                    path: p.display().to_string(),
                    source: e,
                })?;
                generate_series(&ProfileSpec::parse(&text)?)?
            }
        };
        if let Some(h) = self.horizon {
            if h == 0 || h > series.horizon() {
                return Err(DataError::InvalidScenario(format!(
                    "horizon {h} outside 1..={}",
                    series.horizon()
                )));
            }
            for col in [
                &mut series.p_e,
                &mut series.p_g,
                &mut series.p_o,
                &mut series.demand_e,
                &mut series.demand_g,
                &mut series.demand_h,
                &mut series.pv,
            ] {
                col.truncate(h);
            }
        }
        let hub_factor = if self.scale_with_hubs { self.hubs as f64 } else { 1.0 };
        let demand = self.demand_scale * hub_factor;
        let pv = self.pv_scale * hub_factor;
        if demand != 1.0 {
            series.scale_demand(S::lit(demand));
        }
        if pv != 1.0 {
            series.scale_pv(S::lit(pv));
        }
        let hub: HubParams<S> = self.hub.cast();
        let initial = HubState {
            lambda_b: S::lit(self.initial_lambda_b),
            lambda_w: S::lit(self.initial_lambda_w),
            ..HubState::with_levels(
                S::lit(self.initial_b.unwrap_or(self.hub.b_max / 2.0)),
                S::lit(self.initial_w.unwrap_or(self.hub.w_max / 2.0)),
            )
        };
        let env = ParkEnv::new(vec![hub; self.hubs], self.market.cast(), series)?
            .with_zeta(S::lit(self.zeta))?
            .with_lagrange_penalty(self.lagrange)
            .with_mode(self.mode)
            .with_initial(vec![initial; self.hubs])?;
        Ok(env)
    }
}

/// Parses and builds the scenario at `path`.
pub fn load_scenario<S: Scalar>(path: &Path) -> Result<ParkEnv<S>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    ScenarioConfig::parse(&text, base)?.build()
}

/// Short hex digest of everything that determines the environment's dynamics.
pub fn scenario_fingerprint<S: Scalar>(env: &ParkEnv<S>) -> String {
    let mut h = Sha256::new();
    h.update(format!("{:?}", env.hub_params()));
    h.update(format!("{:?}", env.market()));
    h.update(format!("{:?}", env.initial_hubs()));
    h.update(format!("{} {:?} {}", env.zeta(), env.mode(), env.lagrange_penalty()));
    h.update(write_series(env.series()));
    hex::encode(&h.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn scenario_with_generated_profile() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "p.txt", "horizon = 24\n");
        let sc = write(
            dir.path(),
            "s.txt",
            "hubs = 2\nprofile = p.txt\nhorizon = 8\nb_max_mwh = 2\ninitial_b = 500\n\
             scale_with_hubs = true\nlagrange = off\nzeta = 0.001\nmode = strict\n",
        );
        let env: ParkEnv<f64> = load_scenario(&sc).unwrap();
        assert_eq!(env.hub_count(), 2);
        assert_eq!(env.horizon(), 8);
        assert_eq!(env.hub_params()[0].b_max, 2000.0);
        assert_eq!(env.initial_hubs()[1].b, 500.0);
        assert_eq!(env.initial_hubs()[1].w, 2000.0);
        assert_eq!(env.series().demand_e[0], 1600.0);
        assert!(!env.lagrange_penalty());
        assert_eq!(env.mode(), CapacityMode::Strict);
        assert_eq!(env.zeta(), 0.001);
    }

    #[test]
    fn bad_scenarios_rejected() {
        let base = Path::new(".");
        assert!(matches!(
            ScenarioConfig::parse("hubs = 1", base),
            Err(DataError::InvalidScenario(_))
        ));
        assert!(ScenarioConfig::parse("series = a.csv\nprofile = b.txt", base).is_err());
        assert!(ScenarioConfig::parse("series = a.csv\neta_ce_mwh = 1", base).is_err());
        assert!(ScenarioConfig::parse("series = a.csv\nmode = loose", base).is_err());
        assert!(ScenarioConfig::parse("series = a.csv\nflux = 1", base).is_err());
        let cfg = ScenarioConfig::parse("series = missing.csv", base).unwrap();
        assert!(matches!(cfg.build::<f64>(), Err(DataError::Io { .. })));
    }

    #[test]
    fn fingerprint_tracks_dynamics() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "p.txt", "horizon = 6\n");
        let a = write(dir.path(), "a.txt", "profile = p.txt\n");
        let b = write(dir.path(), "b.txt", "profile = p.txt\nb2 = 3\n");
        let fa = scenario_fingerprint(&load_scenario::<f64>(&a).unwrap());
        assert_eq!(fa, scenario_fingerprint(&load_scenario::<f64>(&a).unwrap()));
        assert_ne!(fa, scenario_fingerprint(&load_scenario::<f64>(&b).unwrap()));
        assert_eq!(fa.len(), 16);
    }
}

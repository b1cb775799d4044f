//! Synthetic exogenous profiles: a banded electricity tariff, banded
//! demand peaks per carrier and a daylight PV curve.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::ExogenousSeries;
use crate::scalar::Scalar;

use super::kv::{bad_value, parse_kv};
use super::DataError;

/// Half-open hour interval `[start, end)` within a day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub start: f64,
    pub end: f64,
}

impl Band {
    pub fn contains(&self, hour: f64) -> bool {
        hour >= self.start && hour < self.end
    }
}

fn parse_bands(line: usize, key: &str, value: &str) -> Result<Vec<Band>, DataError> {
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|b| {
            let (s, e) = b.trim().split_once('-').ok_or_else(|| bad_value(line, key, value))?;
            let start: f64 = s.trim().parse().map_err(|_| bad_value(line, key, value))?;
            let end: f64 = e.trim().parse().map_err(|_| bad_value(line, key, value))?;
            Ok(Band { start, end })
        })
        .collect()
}

fn show_bands(bands: &[Band]) -> String {
    if bands.is_empty() {
        return "none".into();
    }
    bands
        .iter()
        .map(|b| format!("{}-{}", b.start, b.end))
        .collect::<Vec<_>>()
        .join(",")
}

/// Base level, banded peak amplitude and relative noise of one demand carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandShape {
    pub base: f64,
    pub peak: f64,
    /// Uniform multiplicative noise of this relative amplitude.
    pub noise: f64,
}

/// Parameters of [`generate_series`]. Slot `t` is hour `t * slot_hours`
/// modulo 24.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub horizon: usize,
    pub slot_hours: f64,
    pub seed: u64,
    pub price_off_peak: f64,
    pub price_shoulder: f64,
    pub price_peak: f64,
    pub off_peak_bands: Vec<Band>,
    pub peak_bands: Vec<Band>,
    /// Sale price as a fraction of the purchase price.
    pub sell_ratio: f64,
    pub gas_price: f64,
    pub demand_bands: Vec<Band>,
    pub demand_e: DemandShape,
    pub demand_h: DemandShape,
    pub demand_g: DemandShape,
    pub pv_peak: f64,
    pub pv_start: f64,
    pub pv_end: f64,
    /// PV is multiplied by `1 - cloud * u` with `u` uniform on `[0, 1)`.
    pub pv_cloud: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            horizon: 24,
            slot_hours: 1.0,
            seed: 0,
            price_off_peak: 0.35,
            price_shoulder: 0.65,
            price_peak: 1.05,
            off_peak_bands: vec![Band { start: 0.0, end: 7.0 }, Band { start: 22.0, end: 24.0 }],
            peak_bands: vec![Band { start: 8.0, end: 11.0 }, Band { start: 17.0, end: 20.0 }],
            sell_ratio: 0.5,
            gas_price: 0.3,
            demand_bands: vec![Band { start: 8.0, end: 11.0 }, Band { start: 17.0, end: 20.0 }],
            demand_e: DemandShape {
                base: 800.0,
                peak: 600.0,
                noise: 0.0,
            },
            demand_h: DemandShape {
                base: 500.0,
                peak: 300.0,
                noise: 0.0,
            },
            demand_g: DemandShape {
                base: 100.0,
                peak: 50.0,
                noise: 0.0,
            },
            pv_peak: 600.0,
            pv_start: 6.0,
            pv_end: 18.0,
            pv_cloud: 0.0,
        }
    }
}

impl ProfileSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut p = Vec::new();
        if self.horizon == 0 {
            p.push("horizon must be >= 1".to_string());
        }
        if !(self.slot_hours > 0.0) {
            p.push("slot_hours must be > 0".into());
        }
        for (name, v) in [
            ("price_off_peak", self.price_off_peak),
            ("price_shoulder", self.price_shoulder),
            ("price_peak", self.price_peak),
            ("gas_price", self.gas_price),
            ("pv_peak", self.pv_peak),
            ("demand_e_base", self.demand_e.base),
            ("demand_e_peak", self.demand_e.peak),
            ("demand_h_base", self.demand_h.base),
            ("demand_h_peak", self.demand_h.peak),
            ("demand_g_base", self.demand_g.base),
            ("demand_g_peak", self.demand_g.peak),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                p.push(format!("{name} must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("sell_ratio", self.sell_ratio),
            ("pv_cloud", self.pv_cloud),
            ("demand_e_noise", self.demand_e.noise),
            ("demand_h_noise", self.demand_h.noise),
            ("demand_g_noise", self.demand_g.noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                p.push(format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, bands) in [
            ("off_peak_bands", &self.off_peak_bands),
            ("peak_bands", &self.peak_bands),
            ("demand_bands", &self.demand_bands),
        ] {
            if bands.iter().any(|b| !(0.0 <= b.start && b.start < b.end && b.end <= 24.0)) {
                p.push(format!("{name} must be ordered hour ranges within 0-24"));
            }
        }
        if !(0.0 <= self.pv_start && self.pv_start < self.pv_end && self.pv_end <= 24.0) {
            p.push("pv window must satisfy 0 <= pv_start < pv_end <= 24".into());
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidSpec(p.join("; ")))
        }
    }

    /// Parses `key = value` lines over the defaults.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut s = Self::default();
        for (line, k, v) in parse_kv(text)? {
            let num = || v.parse::<f64>().map_err(|_| bad_value(line, &k, &v));
            let int = || v.parse::<usize>().map_err(|_| bad_value(line, &k, &v));
            match k.as_str() {
                "horizon" => s.horizon = int()?,
                "slot_hours" => s.slot_hours = num()?,
                "seed" => s.seed = v.parse().map_err(|_| bad_value(line, &k, &v))?,
                "price_off_peak" => s.price_off_peak = num()?,
                "price_shoulder" => s.price_shoulder = num()?,
                "price_peak" => s.price_peak = num()?,
                "off_peak_bands" => s.off_peak_bands = parse_bands(line, &k, &v)?,
                "peak_bands" => s.peak_bands = parse_bands(line, &k, &v)?,
                "sell_ratio" => s.sell_ratio = num()?,
                "gas_price" => s.gas_price = num()?,
                "demand_bands" => s.demand_bands = parse_bands(line, &k, &v)?,
                "demand_e_base" => s.demand_e.base = num()?,
                "demand_e_peak" => s.demand_e.peak = num()?,
                "demand_e_noise" => s.demand_e.noise = num()?,
                "demand_h_base" => s.demand_h.base = num()?,
                "demand_h_peak" => s.demand_h.peak = num()?,
                "demand_h_noise" => s.demand_h.noise = num()?,
                "demand_g_base" => s.demand_g.base = num()?,
                "demand_g_peak" => s.demand_g.peak = num()?,
                "demand_g_noise" => s.demand_g.noise = num()?,
                "pv_peak" => s.pv_peak = num()?,
                "pv_start" => s.pv_start = num()?,
                "pv_end" => s.pv_end = num()?,
                "pv_cloud" => s.pv_cloud = num()?,
                _ => {
                    return Err(DataError::Syntax {
                        line,
                        reason: format!("unknown profile key {k:?}"),
                    })
                }
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(t, "{k} = {v}");
        };
        kv("horizon", self.horizon.to_string());
        kv("slot_hours", self.slot_hours.to_string());
        kv("seed", self.seed.to_string());
        kv("price_off_peak", self.price_off_peak.to_string());
        kv("price_shoulder", self.price_shoulder.to_string());
        kv("price_peak", self.price_peak.to_string());
        kv("off_peak_bands", show_bands(&self.off_peak_bands));
        kv("peak_bands", show_bands(&self.peak_bands));
        kv("sell_ratio", self.sell_ratio.to_string());
        kv("gas_price", self.gas_price.to_string());
        kv("demand_bands", show_bands(&self.demand_bands));
        for (c, d) in [("e", &self.demand_e), ("h", &self.demand_h), ("g", &self.demand_g)] {
            kv(&format!("demand_{c}_base"), d.base.to_string());
            kv(&format!("demand_{c}_peak"), d.peak.to_string());
            kv(&format!("demand_{c}_noise"), d.noise.to_string());
        }
        kv("pv_peak", self.pv_peak.to_string());
        kv("pv_start", self.pv_start.to_string());
        kv("pv_end", self.pv_end.to_string());
        kv("pv_cloud", self.pv_cloud.to_string());
        t
    }

    pub fn hour(&self, t: usize) -> f64 {
        (t as f64 * self.slot_hours).rem_euclid(24.0)
    }

    pub fn electricity_price(&self, hour: f64) -> f64 {
        if self.peak_bands.iter().any(|b| b.contains(hour)) {
            self.price_peak
        } else if self.off_peak_bands.iter().any(|b| b.contains(hour)) {
            self.price_off_peak
        } else {
            self.price_shoulder
        }
    }

    /// Clear-sky PV: a half sine over the daylight window, zero outside it.
    pub fn clear_sky_pv(&self, hour: f64) -> f64 {
        if hour <= self.pv_start || hour >= self.pv_end {
            0.0
        } else {
            self.pv_peak * (PI * (hour - self.pv_start) / (self.pv_end - self.pv_start)).sin()
        }
    }
}

/// Deterministic series for `spec`; the seed drives demand and cloud noise.
pub fn generate_series<S: Scalar>(spec: &ProfileSpec) -> Result<ExogenousSeries<S>, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    fn noisy(rng: &mut ChaCha8Rng, shape: &DemandShape, peak: bool) -> f64 {
        let level = shape.base + if peak { shape.peak } else { 0.0 };
        let u: f64 = rng.gen_range(-1.0..1.0);
        (level * (1.0 + shape.noise * u)).max(0.0)
    }
    let mut series = ExogenousSeries {
        p_e: Vec::with_capacity(spec.horizon),
        p_g: Vec::with_capacity(spec.horizon),
        p_o: Vec::with_capacity(spec.horizon),
        demand_e: Vec::with_capacity(spec.horizon),
        demand_g: Vec::with_capacity(spec.horizon),
        demand_h: Vec::with_capacity(spec.horizon),
        pv: Vec::with_capacity(spec.horizon),
    };
    for t in 0..spec.horizon {
        let hour = spec.hour(t);
        let p_e = spec.electricity_price(hour);
        let peak = spec.demand_bands.iter().any(|b| b.contains(hour));
        let d_e = noisy(&mut rng, &spec.demand_e, peak);
        let d_h = noisy(&mut rng, &spec.demand_h, peak);
        let d_g = noisy(&mut rng, &spec.demand_g, peak);
        let cloud: f64 = rng.gen_range(0.0..1.0);
        let pv = spec.clear_sky_pv(hour) * (1.0 - spec.pv_cloud * cloud);
        series.p_e.push(S::lit(p_e));
        series.p_g.push(S::lit(spec.gas_price));
        series.p_o.push(S::lit(p_e * spec.sell_ratio).min(S::lit(p_e)));
        series.demand_e.push(S::lit(d_e));
        series.demand_h.push(S::lit(d_h));
        series.demand_g.push(S::lit(d_g));
        series.pv.push(S::lit(pv));
    }
    series.validate()?;
    Ok(series)
}

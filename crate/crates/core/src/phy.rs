//! Physical layer: node placement, path-loss gains and SINR rates.
//!
//! Rates are spectral efficiencies in bit/s/Hz. The channel is deterministic
//! path loss `max(d, 1 m)^-η` with no fading.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance below which the path-loss gain is capped at 1.
pub const REFERENCE_DISTANCE: f64 = 1.0;
/// Minimum separation between any two placed UEs, meters.
pub const MIN_SEPARATION: f64 = 0.01;

pub const TOPOLOGY_HEADER: &str = "ue_id,x,y";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.distance(&Point::ORIGIN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// eNB transmit power, W.
    pub p_enb: f64,
    /// D2D transmit power, W.
    pub p_d2d: f64,
    /// Noise power at every receiver, W.
    pub noise: f64,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
}

fn default_exponent() -> f64 {
    3.5
}

impl Default for ChannelParams {
    fn default() -> Self {
        // 46 dBm eNB, 23 dBm UE, -90 dBm noise
        ChannelParams { p_enb: 40.0, p_d2d: 0.2, noise: 1e-12, path_loss_exponent: default_exponent() }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_enb", self.p_enb), ("p_d2d", self.p_d2d), ("noise", self.noise)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("channel.{name} must be positive, got {v}")));
            }
        }
        if !(2.0..=6.0).contains(&self.path_loss_exponent) {
            return Err(Error::config(format!(
                "channel.path_loss_exponent must lie in [2, 6], got {}",
                self.path_loss_exponent
            )));
        }
        Ok(())
    }
}

/// Path-loss power gain `h² = max(d, 1 m)^-η`.
pub fn channel_gain(a: Point, b: Point, eta: f64) -> Result<f64> {
    let d = a.distance(&b);
    if d == 0.0 {
        return Err(Error::domain("channel gain between coincident points"));
    }
    Ok(d.max(REFERENCE_DISTANCE).powf(-eta))
}

/// `log2(1 + signal / (interference + noise))`.
pub fn spectral_efficiency(signal: f64, interference: f64, noise: f64) -> f64 {
    (1.0 + signal / (interference + noise)).log2()
}

/// Dense-area disk that receives a fixed fraction of the UEs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub center: Point,
    pub radius: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub cell_radius: f64,
    pub enb: Point,
    pub ue_positions: BTreeMap<String, Point>,
    pub hotspots: Vec<Hotspot>,
}

impl Topology {
    /// Places the named UEs, each inside its assigned hotspot disk or, when
    /// unassigned, uniformly in the cell.
    pub fn place<R: Rng + ?Sized>(
        cell_radius: f64,
        hotspots: Vec<Hotspot>,
        assignments: &[(String, Option<usize>)],
        rng: &mut R,
    ) -> Result<Topology> {
        if !(cell_radius > 0.0 && cell_radius.is_finite()) {
            return Err(Error::config(format!("cell radius must be positive, got {cell_radius}")));
        }
        for (i, h) in hotspots.iter().enumerate() {
            if !(h.radius > 0.0) || h.center.norm() + h.radius > cell_radius {
                return Err(Error::config(format!("hotspot {i} does not fit inside the cell")));
            }
        }
        let mut ue_positions = BTreeMap::new();
        let mut placed: Vec<Point> = Vec::with_capacity(assignments.len());
        for (id, spot) in assignments {
            let (center, radius) = match spot {
                Some(i) => {
                    let h = hotspots.get(*i).ok_or_else(|| Error::config(format!("no hotspot {i}")))?;
                    (h.center, h.radius)
                }
                None => (Point::ORIGIN, cell_radius),
            };
            let mut p = uniform_in_disk(center, radius, rng);
            let mut attempts = 0;
            while p == Point::ORIGIN || placed.iter().any(|q| q.distance(&p) < MIN_SEPARATION) {
                attempts += 1;
                if attempts > 1000 {
                    return Err(Error::config("could not place UEs with the minimum separation"));
                }
                p = uniform_in_disk(center, radius, rng);
            }
            placed.push(p);
            if ue_positions.insert(id.clone(), p).is_some() {
                return Err(Error::config(format!("duplicate UE id {id}")));
            }
        }
        Ok(Topology { cell_radius, enb: Point::ORIGIN, ue_positions, hotspots })
    }

    pub fn position(&self, ue: &str) -> Result<Point> {
        self.ue_positions.get(ue).copied().ok_or_else(|| Error::domain(format!("unknown UE {ue}")))
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.position(a)?.distance(&self.position(b)?))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TOPOLOGY_HEADER}")?;
        for (id, p) in &self.ue_positions {
            writeln!(out, "{},{},{}", id, p.x, p.y)?;
        }
        Ok(())
    }
}

fn uniform_in_disk<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    Point::new(center.x + r * phi.cos(), center.y + r * phi.sin())
}

/// Places `n_ues` anonymous UEs (`ue0`, `ue1`, …). Hotspot `i` receives
/// `floor(fraction_i · n_ues)` UEs, taken in order; the rest are uniform in
/// the cell.
pub fn place_nodes<R: Rng + ?Sized>(
    n_ues: usize,
    cell_radius: f64,
    hotspots: &[Hotspot],
    rng: &mut R,
) -> Result<Topology> {
    if n_ues == 0 {
        return Err(Error::config("need at least one UE"));
    }
    let total: f64 = hotspots.iter().map(|h| h.fraction).sum();
    if hotspots.iter().any(|h| !(0.0..=1.0).contains(&h.fraction)) || total > 1.0 + 1e-12 {
        return Err(Error::config("hotspot fractions must lie in [0, 1] and sum to at most 1"));
    }
    let width = n_ues.to_string().len();
    let mut assignments = Vec::with_capacity(n_ues);
    for (i, h) in hotspots.iter().enumerate() {
        let count = ((h.fraction * n_ues as f64) + 1e-9).floor() as usize;
        for _ in 0..count.min(n_ues - assignments.len()) {
            assignments.push((format!("ue{:0width$}", assignments.len()), Some(i)));
        }
    }
    while assignments.len() < n_ues {
        assignments.push((format!("ue{:0width$}", assignments.len()), None));
    }
    Topology::place(cell_radius, hotspots.to_vec(), &assignments, rng)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellularLink {
    /// Receiving UE of the eNB downlink.
    pub ue: String,
    pub rb: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2dLink {
    pub tx: String,
    pub rx: String,
    pub rb: usize,
    /// Transmit power, W.
    pub power: f64,
}

/// Active transmissions of one scheduling instant. Two links interfere
/// (β = 1) exactly when they occupy the same resource block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkSet {
    pub cellular: Vec<CellularLink>,
    pub d2d: Vec<D2dLink>,
}

impl LinkSet {
    pub fn validate(&self) -> Result<()> {
        let tx: BTreeSet<&str> = self.d2d.iter().map(|l| l.tx.as_str()).collect();
        if let Some(l) = self.d2d.iter().find(|l| tx.contains(l.rx.as_str())) {
            return Err(Error::domain(format!("UE {} is both a D2D transmitter and receiver", l.rx)));
        }
        if let Some(l) = self.d2d.iter().find(|l| l.tx == l.rx) {
            return Err(Error::domain(format!("D2D link from {} to itself", l.tx)));
        }
        Ok(())
    }

    /// β between cellular link `c` and D2D link `d`.
    pub fn beta_cd(&self, c: usize, d: usize) -> bool {
        self.cellular[c].rb == self.d2d[d].rb
    }

    /// β between two distinct D2D links.
    pub fn beta_dd(&self, d: usize, other: usize) -> bool {
        d != other && self.d2d[d].rb == self.d2d[other].rb
    }
}

/// Downlink rate of cellular link `idx` with co-channel D2D interference.
pub fn rate_cellular(links: &LinkSet, idx: usize, params: &ChannelParams, topo: &Topology) -> Result<f64> {
    let link = links.cellular.get(idx).ok_or_else(|| Error::domain(format!("no cellular link {idx}")))?;
    let rx = topo.position(&link.ue)?;
    let eta = params.path_loss_exponent;
    let signal = params.p_enb * channel_gain(topo.enb, rx, eta)?;
    let mut interference = 0.0;
    for (d, dl) in links.d2d.iter().enumerate() {
        if links.beta_cd(idx, d) {
            interference += dl.power * channel_gain(topo.position(&dl.tx)?, rx, eta)?;
        }
    }
    Ok(spectral_efficiency(signal, interference, params.noise))
}

/// Rate of D2D link `idx`: the eNB downlink always interferes, plus every
/// other D2D pair on the same resource block.
pub fn rate_d2d(links: &LinkSet, idx: usize, params: &ChannelParams, topo: &Topology) -> Result<f64> {
    let link = links.d2d.get(idx).ok_or_else(|| Error::domain(format!("no D2D link {idx}")))?;
    let rx = topo.position(&link.rx)?;
    let eta = params.path_loss_exponent;
    let signal = link.power * channel_gain(topo.position(&link.tx)?, rx, eta)?;
    let mut interference = params.p_enb * channel_gain(topo.enb, rx, eta)?;
    for (d, other) in links.d2d.iter().enumerate() {
        if links.beta_dd(idx, d) {
            interference += other.power * channel_gain(topo.position(&other.tx)?, rx, eta)?;
        }
    }
    Ok(spectral_efficiency(signal, interference, params.noise))
}

/// Interference-free eNB rate `V_c` for a UE at `rx`.
pub fn rate_interference_free(params: &ChannelParams, gain: f64) -> f64 {
    spectral_efficiency(params.p_enb * gain, 0.0, params.noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn gain_examples() {
        let o = Point::ORIGIN;
        assert_eq!(channel_gain(o, Point::new(1.0, 0.0), 3.5).unwrap(), 1.0);
        assert!((channel_gain(o, Point::new(6.0, 8.0), 2.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(channel_gain(o, Point::new(0.0, 0.5), 3.5).unwrap(), 1.0);
        assert!(channel_gain(o, o, 3.5).is_err());
        let (a, b) = (Point::new(3.0, -2.0), Point::new(-7.5, 11.0));
        assert_eq!(channel_gain(a, b, 3.7).unwrap(), channel_gain(b, a, 3.7).unwrap());
    }

    #[test]
    fn formula_examples() {
        assert_eq!(spectral_efficiency(3.0, 0.0, 1.0), 2.0);
        assert!((spectral_efficiency(1.0, 1.0, 1.0) - 1.5f64.log2()).abs() < 1e-15);
        assert!((spectral_efficiency(1.0, 0.5 + 0.5, 1.0) - 0.584_962_500_721_156).abs() < 1e-12);
        let p = ChannelParams { p_enb: 1.0, p_d2d: 1.0, noise: 1.0, path_loss_exponent: 3.0 };
        assert_eq!(rate_interference_free(&p, 1.0), 1.0);
        assert_eq!(rate_interference_free(&p, 3.0), 2.0);
        assert_eq!(rate_interference_free(&p, 0.0), 0.0);
    }

    fn line_topology() -> Topology {
        let ues = [("c", Point::new(10.0, 0.0)), ("t1", Point::new(20.0, 0.0)), ("r1", Point::new(22.0, 0.0)), ("t2", Point::new(30.0, 0.0))];
        Topology {
            cell_radius: 100.0,
            enb: Point::ORIGIN,
            ue_positions: ues.iter().map(|(id, p)| (id.to_string(), *p)).collect(),
            hotspots: vec![],
        }
    }

    #[test]
    fn rates_with_and_without_sharing() {
        let topo = line_topology();
        let params = ChannelParams { p_enb: 1.0, p_d2d: 0.1, noise: 1e-6, path_loss_exponent: 3.0 };
        let vc = rate_interference_free(&params, channel_gain(topo.enb, topo.position("c").unwrap(), 3.0).unwrap());

        let mut links = LinkSet {
            cellular: vec![CellularLink { ue: "c".into(), rb: 0 }],
            d2d: vec![D2dLink { tx: "t1".into(), rx: "r1".into(), rb: 1, power: 0.1 }],
        };
        assert_eq!(rate_cellular(&links, 0, &params, &topo).unwrap(), vc);

        links.d2d[0].rb = 0;
        assert!(rate_cellular(&links, 0, &params, &topo).unwrap() < vc);

        let alone = rate_d2d(&links, 0, &params, &topo).unwrap();
        links.d2d.push(D2dLink { tx: "t2".into(), rx: "c".into(), rb: 0, power: 0.1 });
        assert!(rate_d2d(&links, 0, &params, &topo).unwrap() < alone);
        assert!(links.validate().is_ok());
    }

    #[test]
    fn tx_and_rx_conflict() {
        let links = LinkSet {
            cellular: vec![],
            d2d: vec![
                D2dLink { tx: "a".into(), rx: "b".into(), rb: 0, power: 1.0 },
                D2dLink { tx: "b".into(), rx: "c".into(), rb: 1, power: 1.0 },
            ],
        };
        assert!(links.validate().is_err());
    }

    #[test]
    fn placement_is_reproducible() {
        let a = place_nodes(1, 100.0, &[], &mut stream(9, Stream::Placement)).unwrap();
        let b = place_nodes(1, 100.0, &[], &mut stream(9, Stream::Placement)).unwrap();
        assert_eq!(a, b);
        assert!(a.ue_positions.values().all(|p| p.norm() <= 100.0));
    }

    #[test]
    fn hotspot_containment() {
        let center = Point::new(200.0, 0.0);
        let spot = Hotspot { center, radius: 50.0, fraction: 1.0 };
        let t = place_nodes(40, 500.0, &[spot], &mut stream(1, Stream::Placement)).unwrap();
        assert!(t.ue_positions.values().all(|p| p.distance(&center) <= 50.0));

        let spots = [
            Hotspot { center: Point::new(-200.0, 0.0), radius: 30.0, fraction: 0.5 },
            Hotspot { center: Point::new(200.0, 0.0), radius: 30.0, fraction: 0.5 },
        ];
        let t = place_nodes(20, 500.0, &spots, &mut stream(2, Stream::Placement)).unwrap();
        assert!(t
            .ue_positions
            .values()
            .all(|p| spots.iter().any(|s| p.distance(&s.center) <= s.radius)));
    }

    #[test]
    fn hotspot_outside_cell_is_rejected() {
        let spot = Hotspot { center: Point::new(480.0, 0.0), radius: 50.0, fraction: 0.5 };
        assert!(matches!(place_nodes(4, 500.0, &[spot], &mut stream(1, Stream::Placement)), Err(Error::Config(_))));
    }

    #[test]
    fn topology_csv() {
        let mut buf = Vec::new();
        line_topology().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ue_id,x,y\nc,10,0\n"));
    }
}

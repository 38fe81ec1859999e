//! Two-tier channel and deployment model.
//!
//! Links are noise-limited: SNR is transmit power minus distance path loss
//! and log-normal shadowing, scaled by a Rayleigh power gain, over thermal
//! noise in one resource block. The SNR-to-rate map is Shannon capacity per
//! resource block, optionally capped at a maximum spectral efficiency.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Path loss intercept at 1 km, dB.
pub const PATHLOSS_INTERCEPT_DB: f64 = 128.1;
/// Path loss slope per decade of distance in km, dB.
pub const PATHLOSS_SLOPE_DB: f64 = 37.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadioError {
    #[error("distance must be positive, got {0} km")]
    NonPositiveDistance(f64),
    #[error("invalid channel parameter: {0}")]
    BadParam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Downlink,
    Uplink,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Downlink, Direction::Uplink];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Downlink => "dl",
            Direction::Uplink => "ul",
        }
    }
}

/// Serving cell: the macrocell or one of the small cells (by index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellId {
    Macro,
    Small(usize),
}

impl CellId {
    pub fn label(self) -> String {
        match self {
            CellId::Macro => "macro".to_owned(),
            CellId::Small(i) => format!("small-{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxPower {
    pub macro_dbm: f64,
    pub small_dbm: f64,
    pub user_dbm: f64,
}

impl Default for TxPower {
    fn default() -> Self {
        Self { macro_dbm: 36.0, small_dbm: 25.0, user_dbm: 18.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub shadow_sigma_db: f64,
    pub noise_figure_db: f64,
    pub thermal_noise_dbm_per_hz: f64,
    pub rb_bandwidth_hz: f64,
    pub tx_power: TxPower,
    /// Resource blocks per cell.
    pub n_rbs: usize,
    /// Cap on bit/s/Hz per resource block; `None` leaves Shannon uncapped.
    pub max_spectral_efficiency: Option<f64>,
    /// Distances are clamped to at least this many meters before path loss.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pathloss_intercept_db: PATHLOSS_INTERCEPT_DB,
            pathloss_slope_db: PATHLOSS_SLOPE_DB,
            shadow_sigma_db: 8.0,
            noise_figure_db: 5.0,
            thermal_noise_dbm_per_hz: -174.0,
            rb_bandwidth_hz: 180e3,
            tx_power: TxPower::default(),
            n_rbs: 100,
            max_spectral_efficiency: Some(8.0),
            min_distance_m: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        let finite = [
            ("pathloss_intercept_db", self.pathloss_intercept_db),
            ("pathloss_slope_db", self.pathloss_slope_db),
            ("noise_figure_db", self.noise_figure_db),
            ("thermal_noise_dbm_per_hz", self.thermal_noise_dbm_per_hz),
            ("tx_power.macro_dbm", self.tx_power.macro_dbm),
            ("tx_power.small_dbm", self.tx_power.small_dbm),
            ("tx_power.user_dbm", self.tx_power.user_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(RadioError::BadParam(format!("{name} = {v}")));
            }
        }
        if !(self.shadow_sigma_db >= 0.0 && self.shadow_sigma_db.is_finite()) {
            return Err(RadioError::BadParam(format!("shadow_sigma_db = {}", self.shadow_sigma_db)));
        }
        if !(self.rb_bandwidth_hz > 0.0 && self.rb_bandwidth_hz.is_finite()) {
            return Err(RadioError::BadParam(format!("rb_bandwidth_hz = {}", self.rb_bandwidth_hz)));
        }
        if self.n_rbs == 0 {
            return Err(RadioError::BadParam("n_rbs must be at least 1".into()));
        }
        if let Some(cap) = self.max_spectral_efficiency {
            if !(cap > 0.0) {
                return Err(RadioError::BadParam(format!("max_spectral_efficiency = {cap}")));
            }
        }
        if !(self.min_distance_m > 0.0) {
            return Err(RadioError::BadParam(format!("min_distance_m = {}", self.min_distance_m)));
        }
        Ok(())
    }

    pub fn path_loss_db(&self, distance_km: f64) -> Result<f64, RadioError> {
        if !(distance_km > 0.0) {
            return Err(RadioError::NonPositiveDistance(distance_km));
        }
        Ok(self.pathloss_intercept_db + self.pathloss_slope_db * distance_km.log10())
    }

    /// Thermal noise over one resource block plus the receiver noise figure, dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.thermal_noise_dbm_per_hz + 10.0 * self.rb_bandwidth_hz.log10() + self.noise_figure_db
    }

    /// Transmit power for a link: the cell's in downlink, the user's in uplink.
    pub fn tx_power_dbm(&self, cell: CellId, direction: Direction) -> f64 {
        match (direction, cell) {
            (Direction::Uplink, _) => self.tx_power.user_dbm,
            (Direction::Downlink, CellId::Macro) => self.tx_power.macro_dbm,
            (Direction::Downlink, CellId::Small(_)) => self.tx_power.small_dbm,
        }
    }
}

/// `128.1 + 37.6 log10(d_km)`.
pub fn path_loss_db(distance_km: f64) -> Result<f64, RadioError> {
    ChannelParams::default().path_loss_db(distance_km)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

/// Zero-mean normal draw with standard deviation `sigma_db`.
pub fn shadowing_sample<R: Rng + ?Sized>(rng: &mut R, sigma_db: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma_db * z
}

/// Squared magnitude of a unit-power Rayleigh coefficient: Exp(1).
pub fn rayleigh_fading_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Radio state of one user-cell pair for one Monte Carlo iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub user: usize,
    pub cell: CellId,
    pub distance_km: f64,
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    /// Current small-scale power gain; 1.0 when no draw has been applied.
    pub fading_gain: f64,
}

impl LinkState {
    /// Large-scale state of a link. `distance_km` is clamped to the configured minimum.
    pub fn new(
        user: usize,
        cell: CellId,
        distance_km: f64,
        shadowing_db: f64,
        params: &ChannelParams,
    ) -> Result<Self, RadioError> {
        let distance_km = distance_km.max(params.min_distance_m / 1000.0);
        Ok(Self {
            user,
            cell,
            distance_km,
            path_loss_db: params.path_loss_db(distance_km)?,
            shadowing_db,
            fading_gain: 1.0,
        })
    }

    pub fn with_fading(self, fading_gain: f64) -> Self {
        Self { fading_gain, ..self }
    }

    /// SNR in dB excluding small-scale fading.
    pub fn mean_snr_db(&self, params: &ChannelParams, direction: Direction) -> f64 {
        params.tx_power_dbm(self.cell, direction) - self.path_loss_db - self.shadowing_db - params.noise_power_dbm()
    }
}

/// Linear SNR of a link including its current fading gain.
pub fn snr_linear(link: &LinkState, params: &ChannelParams, direction: Direction) -> f64 {
    if link.fading_gain <= 0.0 {
        return 0.0;
    }
    db_to_linear(link.mean_snr_db(params, direction) + linear_to_db(link.fading_gain))
}

/// Achievable bit rate of one resource block at `snr` (linear).
pub fn rate_per_rb(snr: f64, params: &ChannelParams) -> f64 {
    let efficiency = (1.0 + snr.max(0.0)).log2();
    let efficiency = match params.max_spectral_efficiency {
        Some(cap) => efficiency.min(cap),
        None => efficiency,
    };
    params.rb_bandwidth_hz * efficiency
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub center: Point,
    pub radius_m: f64,
}

impl Cell {
    pub fn covers(&self, p: Point) -> bool {
        self.center.distance(p) <= self.radius_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploymentConfig {
    pub macro_radius_m: f64,
    pub small_radius_m: f64,
    pub n_small_cells: usize,
    pub n_users: usize,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self { macro_radius_m: 100.0, small_radius_m: 30.0, n_small_cells: 4, n_users: 50 }
    }
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.macro_radius_m > 0.0 && self.macro_radius_m.is_finite()) {
            return Err(RadioError::BadParam(format!("macro_radius_m = {}", self.macro_radius_m)));
        }
        if !(self.small_radius_m > 0.0 && self.small_radius_m.is_finite()) {
            return Err(RadioError::BadParam(format!("small_radius_m = {}", self.small_radius_m)));
        }
        if self.n_users == 0 {
            return Err(RadioError::BadParam("n_users must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub macro_cell: Cell,
    pub small_cells: Vec<Cell>,
    pub users: Vec<Point>,
}

/// Uniform point in a disc by rejection from the bounding square.
pub fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    loop {
        let x: f64 = rng.random_range(-1.0..=1.0);
        let y: f64 = rng.random_range(-1.0..=1.0);
        if x * x + y * y <= 1.0 {
            return Point { x: center.x + radius * x, y: center.y + radius * y };
        }
    }
}

/// Small-cell centers, then users, all uniform in the macro disc.
pub fn generate_deployment<R: Rng + ?Sized>(rng: &mut R, cfg: &DeploymentConfig) -> Deployment {
    let macro_cell = Cell { center: Point::ORIGIN, radius_m: cfg.macro_radius_m };
    let small_cells = (0..cfg.n_small_cells)
        .map(|_| Cell {
            center: uniform_in_disc(rng, macro_cell.center, cfg.macro_radius_m),
            radius_m: cfg.small_radius_m,
        })
        .collect();
    let users = (0..cfg.n_users).map(|_| uniform_in_disc(rng, macro_cell.center, cfg.macro_radius_m)).collect();
    Deployment { macro_cell, small_cells, users }
}

impl Deployment {
    pub fn cell(&self, id: CellId) -> &Cell {
        match id {
            CellId::Macro => &self.macro_cell,
            CellId::Small(i) => &self.small_cells[i],
        }
    }

    /// Nearest small cell whose coverage contains the user.
    pub fn covering_small_cell(&self, user: usize) -> Option<usize> {
        let p = self.users[user];
        self.small_cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.covers(p))
            .min_by(|(_, a), (_, b)| a.center.distance(p).total_cmp(&b.center.distance(p)))
            .map(|(i, _)| i)
    }

    /// Writes `entity,x,y,radius` rows; users have radius 0.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["entity", "x", "y", "radius"])?;
        let mut row =
            |name: String, p: Point, r: f64| w.write_record([name, p.x.to_string(), p.y.to_string(), r.to_string()]);
        row("macro".into(), self.macro_cell.center, self.macro_cell.radius_m)?;
        for (i, c) in self.small_cells.iter().enumerate() {
            row(format!("small-{i}"), c.center, c.radius_m)?;
        }
        for (i, &u) in self.users.iter().enumerate() {
            row(format!("user-{i}"), u, 0.0)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Large-scale link states of every user towards the macro and every small
/// cell. Shadowing is drawn in a fixed order (user-major, macro first) so the
/// same stream always yields the same states.
pub fn draw_link_states<R: Rng + ?Sized>(
    rng: &mut R,
    deployment: &Deployment,
    params: &ChannelParams,
) -> Result<Vec<Vec<LinkState>>, RadioError> {
    let cells: Vec<CellId> =
        std::iter::once(CellId::Macro).chain((0..deployment.small_cells.len()).map(CellId::Small)).collect();
    deployment
        .users
        .iter()
        .enumerate()
        .map(|(u, &p)| {
            cells
                .iter()
                .map(|&c| {
                    let d_km = deployment.cell(c).center.distance(p) / 1000.0;
                    LinkState::new(u, c, d_km, shadowing_sample(rng, params.shadow_sigma_db), params)
                })
                .collect()
        })
        .collect()
}

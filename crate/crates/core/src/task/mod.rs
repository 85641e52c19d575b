//! Multi-AUV underwater data-collection environment.
//!
//! Each step the AUVs move under their commanded velocity plus the local vortex current,
//! collect data from seabed nodes in range, the USV replans and moves toward the
//! information-maximising waypoint, and every AUV is re-fixed by USBL. Observations and
//! the USV-distance reward term use those USBL estimates.

mod reward;

pub use reward::{
    base_reward, propulsion_energy, thorp_absorption_db_per_km, usv_distance_reward, LinkBudget,
    RewardWeights,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{plan_usv_waypoint, step_usv, PlannerConfig, Waypoint};
use crate::geometry::{Point2, Rect};
use crate::ocean::{current_velocity, step_wave, CurrentSample, VortexSet, WaveConfig, WaveField};
use crate::usbl::{estimate_position, synthesize_measurement, AuvTruth, MeasurementRecord, UsblConfig, UsvState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeaCondition {
    /// No waves, no currents.
    Ideal,
    /// Shallow-water waves and vortex currents.
    Extreme,
}

impl std::fmt::Display for SeaCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeaCondition::Ideal => "ideal",
            SeaCondition::Extreme => "extreme",
        })
    }
}

impl std::str::FromStr for SeaCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(SeaCondition::Ideal),
            "extreme" => Ok(SeaCondition::Extreme),
            other => Err(Error::Config(format!("unknown sea condition {other:?}"))),
        }
    }
}

/// How the USV chooses where to be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UsvMode {
    /// Replan the Fisher-information waypoint every step.
    Planned,
    /// Hold station at a fixed point.
    Fixed(Point2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub area: Rect,
    pub n_nodes: usize,
    /// Data buffered at each node at reset (rate·s units).
    pub node_queue: f64,
    pub comm_radius: f64,
    /// One entry per AUV (m, positive down).
    pub auv_depths: Vec<f64>,
    pub auv_starts: Vec<Point2>,
    pub auv_vmax: f64,
    /// Decision interval Δt (s).
    pub dt: f64,
    pub max_steps: usize,
    /// Number of nearest non-empty nodes in each observation.
    pub nearest_nodes: usize,
    pub weights: RewardWeights,
    pub c_e: f64,
    pub link: LinkBudget,
    pub d_coll: f64,
    pub l_floor: f64,
    pub sea: SeaCondition,
    /// USBL channel for each AUV.
    pub usbl: Vec<UsblConfig>,
    pub planner: PlannerConfig,
    pub usv_mode: UsvMode,
    pub wave: WaveConfig,
    pub vortices: VortexSet,
}

impl Default for TaskConfig {
    fn default() -> Self {
        let area = Rect::new(0.0, 0.0, 200.0, 200.0);
        let usbl = UsblConfig::default();
        Self {
            area,
            n_nodes: 30,
            node_queue: 5000.0,
            comm_radius: 25.0,
            auv_depths: vec![100.0, 110.0],
            auv_starts: vec![Point2::new(50.0, 50.0), Point2::new(150.0, 150.0)],
            auv_vmax: 2.0,
            dt: 10.0,
            max_steps: 100,
            nearest_nodes: 5,
            weights: RewardWeights::default(),
            c_e: 1.0,
            link: LinkBudget::default(),
            d_coll: 5.0,
            l_floor: 1.0,
            sea: SeaCondition::Extreme,
            usbl: vec![usbl.with_frequency(15_000.0), usbl.with_frequency(18_000.0)],
            planner: PlannerConfig {
                bounds: area,
                ..PlannerConfig::default()
            },
            usv_mode: UsvMode::Planned,
            wave: WaveConfig::default(),
            vortices: default_vortices(&area),
        }
    }
}

pub const DEFAULT_VORTEX_SEED: u64 = 2024;
pub const DEFAULT_VORTEX_COUNT: usize = 3;
/// Γ magnitude range (m²/s); the sense is drawn at random.
pub const DEFAULT_VORTEX_GAMMA: (f64, f64) = (5.0, 20.0);
/// δ range (m).
pub const DEFAULT_VORTEX_DELTA: (f64, f64) = (10.0, 30.0);

/// The default vortex field, drawn once from a fixed seed so every run shares the scene.
pub fn default_vortices(area: &Rect) -> VortexSet {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_VORTEX_SEED);
    VortexSet::random(&mut rng, DEFAULT_VORTEX_COUNT, area, DEFAULT_VORTEX_GAMMA, DEFAULT_VORTEX_DELTA)
}

impl TaskConfig {
    pub fn n_auvs(&self) -> usize {
        self.auv_depths.len()
    }

    pub fn obs_dim(&self) -> usize {
        2 + 3 * self.nearest_nodes + 2 * (self.n_auvs().saturating_sub(1)) + 2 + 1
    }

    /// Largest horizontal AUV-USV separation.
    pub fn l_max(&self) -> f64 {
        self.area.diagonal()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_auvs();
        if self.n_nodes == 0 {
            return Err(Error::Config("task needs at least one sensor node".into()));
        }
        if m == 0 {
            return Err(Error::Config("task needs at least one AUV".into()));
        }
        if self.auv_starts.len() != m || self.usbl.len() != m {
            return Err(Error::Config(format!(
                "{m} AUV depths but {} start positions and {} USBL channels",
                self.auv_starts.len(),
                self.usbl.len()
            )));
        }
        if let Some(p) = self.auv_starts.iter().find(|p| !self.area.contains(**p)) {
            return Err(Error::Config(format!("AUV start {p:?} outside the mission area")));
        }
        if self.auv_depths.iter().any(|z| !(*z > 0.0)) {
            return Err(Error::Config("AUV depths must be positive".into()));
        }
        let positive = [
            ("node_queue", self.node_queue),
            ("comm_radius", self.comm_radius),
            ("auv_vmax", self.auv_vmax),
            ("dt", self.dt),
            ("l_floor", self.l_floor),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        for c in &self.usbl {
            c.validate()?;
        }
        self.planner.validate()?;
        self.wave.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    pub pos: Point2,
    pub queue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuvAgentState {
    pub pos: Point2,
    pub depth: f64,
    /// Ground velocity over the last step (m/s).
    pub velocity: Point2,
    pub energy_used: f64,
    pub collected: f64,
    pub perceived_current: CurrentSample,
}

/// Heading (rad) and speed (m/s) command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub heading: f64,
    pub speed: f64,
}

impl Action {
    pub fn new(heading: f64, speed: f64) -> Self {
        Self { heading, speed }
    }

    /// Maps a policy output in [-1, 1]² to a velocity command: direction of the vector,
    /// speed `vmax · min(1, |a|)`.
    pub fn from_unit(a: &[f64], vmax: f64) -> Self {
        let (x, y) = (a[0], a[1]);
        let norm = x.hypot(y);
        let heading = if norm > 0.0 { y.atan2(x) } else { 0.0 };
        Self {
            heading,
            speed: vmax * norm.min(1.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.heading.is_finite() && self.speed.is_finite()
    }

    fn velocity(&self) -> Point2 {
        Point2::new(self.speed * self.heading.cos(), self.speed * self.heading.sin())
    }
}

/// Events recorded when tracing is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEvent {
    Plan,
    Measure,
    Act(usize),
    Update(usize),
    Store(usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    /// Σ over AUVs of the link rate to non-empty nodes in range.
    pub sum_rate: f64,
    /// Σ over AUVs of propulsion energy this step.
    pub energy: f64,
    pub collisions: usize,
    pub rates: Vec<f64>,
    pub energies: Vec<f64>,
    pub collided: Vec<bool>,
    pub dropouts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: StepInfo,
}

/// One row of an episode trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeTraceRow {
    pub t: f64,
    pub auv_id: usize,
    pub truth: Point2,
    pub estimate: Point2,
    pub reward: f64,
    pub rate: f64,
    pub energy: f64,
    pub current_speed: f64,
    pub usv: Point2,
}

impl EpisodeTraceRow {
    pub const CSV_HEADER: &'static str = "t,auv_id,x,y,x_hat,y_hat,reward,rate,energy,current_speed,usv_x,usv_y";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.auv_id,
            self.truth.x,
            self.truth.y,
            self.estimate.x,
            self.estimate.y,
            self.reward,
            self.rate,
            self.energy,
            self.current_speed,
            self.usv.x,
            self.usv.y
        )
    }
}

pub struct TaskEnv {
    cfg: TaskConfig,
    rng: ChaCha8Rng,
    nodes: Vec<SensorNode>,
    auvs: Vec<AuvAgentState>,
    estimates: Vec<Point2>,
    usv: UsvState,
    waypoint: Option<Waypoint>,
    wave: Option<WaveField>,
    t: f64,
    steps: usize,
    done: bool,
    initial_data: f64,
    last_commands: Vec<Point2>,
    last_measurements: Vec<MeasurementRecord>,
    dropouts: usize,
    trace: Option<Vec<TraceEvent>>,
}

impl TaskEnv {
    pub fn new(cfg: TaskConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.n_auvs();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(0),
            nodes: Vec::new(),
            auvs: Vec::with_capacity(m),
            estimates: Vec::with_capacity(m),
            usv: UsvState::default(),
            waypoint: None,
            wave: None,
            t: 0.0,
            steps: 0,
            done: true,
            initial_data: 0.0,
            last_commands: vec![Point2::default(); m],
            last_measurements: Vec::with_capacity(m),
            dropouts: 0,
            trace: None,
            cfg,
        })
    }

    pub fn config(&self) -> &TaskConfig {
        &self.cfg
    }

    pub fn n_auvs(&self) -> usize {
        self.cfg.n_auvs()
    }

    pub fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    pub fn auvs(&self) -> &[AuvAgentState] {
        &self.auvs
    }

    pub fn estimates(&self) -> &[Point2] {
        &self.estimates
    }

    pub fn usv(&self) -> &UsvState {
        &self.usv
    }

    pub fn waypoint(&self) -> Option<&Waypoint> {
        self.waypoint.as_ref()
    }

    pub fn wave_field(&self) -> Option<&WaveField> {
        self.wave.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn last_measurements(&self) -> &[MeasurementRecord] {
        &self.last_measurements
    }

    /// Measurement dropouts (infeasible geometry) since reset.
    pub fn dropouts(&self) -> usize {
        self.dropouts
    }

    /// Data collected so far this episode.
    pub fn collected(&self) -> f64 {
        self.auvs.iter().map(|a| a.collected).sum()
    }

    pub fn remaining(&self) -> f64 {
        self.nodes.iter().map(|n| n.queue).sum()
    }

    pub fn initial_data(&self) -> f64 {
        self.initial_data
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn record(&mut self, e: TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(e);
        }
    }

    fn current_at(&self, p: Point2) -> CurrentSample {
        match self.cfg.sea {
            SeaCondition::Ideal => CurrentSample::default(),
            SeaCondition::Extreme => current_velocity(&self.cfg.vortices, p),
        }
    }

    /// Starts a new episode; returns one observation per AUV.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<Vec<f64>>> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let area = cfg.area;
        self.nodes = (0..cfg.n_nodes)
            .map(|_| SensorNode {
                pos: Point2::new(
                    rng.random_range(area.min.x..=area.max.x),
                    rng.random_range(area.min.y..=area.max.y),
                ),
                queue: cfg.node_queue,
            })
            .collect();
        self.initial_data = cfg.node_queue * cfg.n_nodes as f64;
        self.rng = rng;

        self.auvs = cfg
            .auv_starts
            .iter()
            .zip(&cfg.auv_depths)
            .map(|(&pos, &depth)| AuvAgentState {
                pos,
                depth,
                velocity: Point2::default(),
                energy_used: 0.0,
                collected: 0.0,
                perceived_current: CurrentSample::default(),
            })
            .collect();
        for k in 0..self.auvs.len() {
            self.auvs[k].perceived_current = self.current_at(self.auvs[k].pos);
        }
        // launch points are known, so they seed the first plan
        self.estimates = cfg.auv_starts.clone();
        self.last_commands = vec![Point2::default(); self.auvs.len()];

        self.wave = match self.cfg.sea {
            SeaCondition::Ideal => None,
            SeaCondition::Extreme => Some(
                WaveField::covering(&self.cfg.area, self.cfg.wave.dx).with_standing_tide(&self.cfg.wave)?,
            ),
        };
        let start = match self.cfg.usv_mode {
            UsvMode::Planned => self.cfg.area.center(),
            UsvMode::Fixed(p) => p,
        };
        self.usv = UsvState {
            pos: start,
            eta: self.eta_at(start),
        };
        self.t = 0.0;
        self.steps = 0;
        self.done = false;
        self.dropouts = 0;
        self.trace = self.trace.take().map(|_| Vec::new());

        self.plan_usv()?;
        self.measure();
        Ok(self.observations())
    }

    fn eta_at(&self, p: Point2) -> f64 {
        self.wave.as_ref().map_or(0.0, |w| w.sample_eta(p))
    }

    fn truths(&self) -> Vec<AuvTruth> {
        self.auvs
            .iter()
            .map(|a| AuvTruth {
                pos: a.pos,
                depth: a.depth,
            })
            .collect()
    }

    /// Replans the USV waypoint from the current AUV estimates.
    fn plan_usv(&mut self) -> Result<()> {
        self.record(TraceEvent::Plan);
        self.waypoint = match self.cfg.usv_mode {
            UsvMode::Fixed(p) => Some(Waypoint {
                target: p,
                det: 0.0,
                degenerate: false,
            }),
            UsvMode::Planned => {
                let est: Vec<AuvTruth> = self
                    .estimates
                    .iter()
                    .zip(&self.cfg.auv_depths)
                    .map(|(&pos, &depth)| AuvTruth { pos, depth })
                    .collect();
                Some(plan_usv_waypoint(
                    &est,
                    &self.cfg.usbl,
                    &self.cfg.planner,
                    self.usv.pos,
                    self.usv.eta,
                )?)
            }
        };
        Ok(())
    }

    /// Fixes every AUV by USBL. Dropouts fall back to dead reckoning from the last fix.
    fn measure(&mut self) {
        self.record(TraceEvent::Measure);
        self.last_measurements.clear();
        let truths = self.truths();
        for (k, truth) in truths.iter().enumerate() {
            let chan = self.cfg.usbl[k];
            let meas = synthesize_measurement(&self.usv, truth, &chan, &mut self.rng);
            let estimate = estimate_position(&meas, truth.depth, &self.usv, &chan).ok();
            match estimate {
                Some(p) => self.estimates[k] = p,
                None => {
                    self.dropouts += 1;
                    let dr = self.estimates[k] + self.last_commands[k] * self.cfg.dt;
                    self.estimates[k] = self.cfg.area.clamp(dr);
                }
            }
            self.last_measurements.push(MeasurementRecord {
                t: self.t,
                auv_id: k,
                meas,
                estimate,
                truth: truth.pos,
            });
        }
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.auvs.len()).map(|k| self.observation(k)).collect()
    }

    /// Observation of AUV `k`: own estimated position, nearest non-empty nodes (relative
    /// position and queue fill), other AUVs and the USV relative to the own estimate, and
    /// the magnitude of the current the AUV perceives.
    pub fn observation(&self, k: usize) -> Vec<f64> {
        let cfg = &self.cfg;
        let c = cfg.area.center();
        let hx = 0.5 * cfg.area.width();
        let hy = 0.5 * cfg.area.height();
        let own = self.estimates[k];
        let mut obs = Vec::with_capacity(cfg.obs_dim());
        obs.push((own.x - c.x) / hx);
        obs.push((own.y - c.y) / hy);

        let mut near: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.queue > 0.0)
            .map(|(i, n)| (n.pos.distance(own), i))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for slot in 0..cfg.nearest_nodes {
            match near.get(slot) {
                Some(&(_, i)) => {
                    let n = &self.nodes[i];
                    obs.push((n.pos.x - own.x) / hx);
                    obs.push((n.pos.y - own.y) / hy);
                    obs.push(n.queue / cfg.node_queue);
                }
                None => obs.extend([0.0, 0.0, 0.0]),
            }
        }
        for (j, other) in self.estimates.iter().enumerate() {
            if j != k {
                obs.push((other.x - own.x) / hx);
                obs.push((other.y - own.y) / hy);
            }
        }
        obs.push((self.usv.pos.x - own.x) / hx);
        obs.push((self.usv.pos.y - own.y) / hy);
        obs.push(self.auvs[k].perceived_current.speed);
        obs
    }

    /// USV shaping term for AUV `k` from its latest estimate.
    pub fn usv_distance_reward(&self, k: usize) -> f64 {
        let l = self.estimates[k].distance(self.usv.pos);
        usv_distance_reward(l, self.cfg.l_max(), self.cfg.l_floor)
    }

    fn collided(&self, k: usize) -> bool {
        let p = self.auvs[k].pos;
        let near_other = self
            .auvs
            .iter()
            .enumerate()
            .any(|(j, a)| j != k && a.pos.distance(p) < self.cfg.d_coll);
        near_other || self.cfg.area.edge_distance(p) < self.cfg.d_coll
    }

    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome> {
        let m = self.auvs.len();
        if actions.len() != m {
            return Err(Error::Contract(format!("{} actions for {m} AUVs", actions.len())));
        }
        if let Some(a) = actions.iter().find(|a| !a.is_finite()) {
            return Err(Error::Contract(format!("non-finite action {a:?}")));
        }
        if self.done {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        let dt = self.cfg.dt;
        let area = self.cfg.area;

        let mut energies = vec![0.0; m];
        for (k, action) in actions.iter().enumerate() {
            let speed = action.speed.clamp(0.0, self.cfg.auv_vmax);
            let cmd = Action::new(action.heading, speed).velocity();
            let drift = self.current_at(self.auvs[k].pos);
            let old = self.auvs[k].pos;
            let new = area.clamp(Point2::new(old.x + (cmd.x + drift.vx) * dt, old.y + (cmd.y + drift.vy) * dt));
            let e = propulsion_energy(self.cfg.c_e, speed, dt);
            let auv = &mut self.auvs[k];
            auv.pos = new;
            auv.velocity = (new - old) * (1.0 / dt);
            auv.energy_used += e;
            energies[k] = e;
            self.last_commands[k] = cmd;
        }
        for k in 0..m {
            self.auvs[k].perceived_current = self.current_at(self.auvs[k].pos);
        }

        // collection in AUV order; a node shared by two AUVs serves the first one first
        let mut rates = vec![0.0; m];
        for k in 0..m {
            let p = self.auvs[k].pos;
            for node in self.nodes.iter_mut() {
                let l = node.pos.distance(p);
                if node.queue > 0.0 && l <= self.cfg.comm_radius {
                    let r = self.cfg.link.rate(l);
                    let amount = (r * dt).min(node.queue);
                    node.queue -= amount;
                    self.auvs[k].collected += amount;
                    rates[k] += r;
                }
            }
        }
        let collided: Vec<bool> = (0..m).map(|k| self.collided(k)).collect();

        self.t += dt;
        self.steps += 1;
        if let Some(w) = self.wave.as_mut() {
            step_wave(w, &self.cfg.wave, dt)?;
        }
        self.plan_usv()?;
        let target = self.waypoint.as_ref().map_or(self.usv.pos, |w| w.target);
        let pos = step_usv(self.usv.pos, target, self.cfg.planner.usv_vmax, dt, &area);
        self.usv = UsvState {
            pos,
            eta: self.eta_at(pos),
        };
        let before = self.dropouts;
        self.measure();

        let rewards: Vec<f64> = (0..m)
            .map(|k| {
                base_reward(&self.cfg.weights, rates[k], energies[k], collided[k])
                    + self.cfg.weights.w_usv * self.usv_distance_reward(k)
            })
            .collect();

        self.done = self.steps >= self.cfg.max_steps || self.nodes.iter().all(|n| n.queue <= 0.0);
        let info = StepInfo {
            sum_rate: rates.iter().sum(),
            energy: energies.iter().sum(),
            collisions: collided.iter().filter(|c| **c).count(),
            rates,
            energies,
            collided,
            dropouts: self.dropouts - before,
        };
        Ok(StepOutcome {
            observations: self.observations(),
            rewards,
            done: self.done,
            info,
        })
    }

    /// Trace rows describing the state after `outcome`.
    pub fn trace_rows(&self, outcome: &StepOutcome) -> Vec<EpisodeTraceRow> {
        (0..self.auvs.len())
            .map(|k| EpisodeTraceRow {
                t: self.t,
                auv_id: k,
                truth: self.auvs[k].pos,
                estimate: self.estimates[k],
                reward: outcome.rewards[k],
                rate: outcome.info.rates[k],
                energy: outcome.info.energies[k],
                current_speed: self.auvs[k].perceived_current.speed,
                usv: self.usv.pos,
            })
            .collect()
    }

    /// Scripted policy: head at full speed for the nearest non-empty node (true
    /// positions) and hold still once it is within half the communication radius.
    pub fn greedy_actions(&self) -> Vec<Action> {
        self.auvs
            .iter()
            .map(|a| {
                let target = self
                    .nodes
                    .iter()
                    .filter(|n| n.queue > 0.0)
                    .min_by(|x, y| x.pos.distance(a.pos).total_cmp(&y.pos.distance(a.pos)));
                match target {
                    Some(n) if n.pos.distance(a.pos) > 0.5 * self.cfg.comm_radius => {
                        let d = n.pos - a.pos;
                        Action::new(d.y.atan2(d.x), self.cfg.auv_vmax)
                    }
                    _ => Action::new(0.0, 0.0),
                }
            })
            .collect()
    }
}

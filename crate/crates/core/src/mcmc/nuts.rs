//! Dynamic-trajectory Hamiltonian Monte Carlo.
//!
//! Trajectories grow by doubling in a random direction until a (generalised)
//! U-turn appears or the tree reaches `max_depth`; the returned state is drawn
//! multinomially across the trajectory, biased towards the newest subtree.
//! During warmup the step size is tuned by dual averaging, and a diagonal
//! metric can be estimated over doubling windows.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unnormalised log density on an unconstrained space.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns the log density at `x` and writes its gradient into `grad`.
    /// A non-finite value marks `x` as outside the support.
    fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NutsSettings {
    pub iter_warmup: usize,
    pub iter_sampling: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    /// Estimate a diagonal metric during warmup; otherwise the metric stays at
    /// the identity.
    pub adapt_metric: bool,
    /// Energy error beyond which a trajectory is declared divergent.
    pub max_energy_error: f64,
}

impl Default for NutsSettings {
    fn default() -> Self {
        Self {
            iter_warmup: 1000,
            iter_sampling: 1000,
            target_accept: 0.8,
            max_depth: 10,
            adapt_metric: true,
            max_energy_error: 1000.0,
        }
    }
}

/// Per-iteration sampler statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawStats {
    pub lp: f64,
    pub accept_stat: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Post-warmup draws, one row per iteration.
    pub draws: Vec<Vec<f64>>,
    pub stats: Vec<DrawStats>,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    g: Vec<f64>,
    logp: f64,
}

impl Point {
    fn new<T: LogDensity>(target: &T, q: Vec<f64>) -> Self {
        let mut g = vec![0.0; q.len()];
        let logp = target.log_density_grad(&q, &mut g);
        let p = vec![0.0; q.len()];
        Self { q, p, g, logp }
    }
}

/// Step-size adaptation by dual averaging.
#[derive(Debug, Clone)]
struct DualAveraging {
    mu: f64,
    s_bar: f64,
    x_bar: f64,
    counter: f64,
    delta: f64,
    gamma: f64,
    kappa: f64,
    t0: f64,
}

impl DualAveraging {
    fn new(delta: f64) -> Self {
        Self {
            mu: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
            counter: 0.0,
            delta,
            gamma: 0.05,
            kappa: 0.75,
            t0: 10.0,
        }
    }

    fn restart(&mut self, step: f64) {
        self.mu = (10.0 * step).ln();
        self.s_bar = 0.0;
        self.x_bar = 0.0;
        self.counter = 0.0;
    }

    fn learn(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let stat = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - stat);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    fn finish(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Doubling-window schedule for metric estimation.
#[derive(Debug, Clone)]
struct WindowSchedule {
    num_warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    counter: usize,
    window_size: usize,
    next_window: usize,
    enabled: bool,
    // Welford accumulators
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl WindowSchedule {
    fn new(num_warmup: usize, dim: usize, enabled: bool) -> Self {
        let (mut init_buffer, mut term_buffer, mut base_window) = (75usize, 50usize, 25usize);
        let enabled = enabled && num_warmup >= 20;
        if init_buffer + base_window + term_buffer > num_warmup {
            init_buffer = (0.15 * num_warmup as f64) as usize;
            term_buffer = (0.1 * num_warmup as f64) as usize;
            base_window = num_warmup.saturating_sub(init_buffer + term_buffer);
        }
        Self {
            num_warmup,
            init_buffer,
            term_buffer,
            counter: 0,
            window_size: base_window,
            next_window: (init_buffer + base_window).saturating_sub(1),
            enabled,
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn in_window(&self) -> bool {
        self.counter >= self.init_buffer
            && self.counter < self.num_warmup - self.term_buffer
            && self.counter != self.num_warmup
    }

    fn window_ends(&self) -> bool {
        self.counter == self.next_window && self.counter != self.num_warmup
    }

    fn compute_next_window(&mut self) {
        let last = self.num_warmup - self.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last {
            let boundary = self.next_window + 2 * self.window_size;
            if boundary >= self.num_warmup - self.term_buffer {
                self.next_window = last;
            }
        }
    }

    /// Records `q`; returns a new inverse metric when a window closes.
    fn observe(&mut self, q: &[f64]) -> Option<Vec<f64>> {
        if !self.enabled {
            return None;
        }
        if self.in_window() {
            self.n += 1;
            for i in 0..q.len() {
                let d = q[i] - self.mean[i];
                self.mean[i] += d / self.n as f64;
                self.m2[i] += d * (q[i] - self.mean[i]);
            }
        }
        if self.window_ends() {
            self.compute_next_window();
            let n = self.n as f64;
            let var: Vec<f64> = self
                .m2
                .iter()
                .map(|m2| {
                    let v = if n > 1.0 { m2 / (n - 1.0) } else { 1.0 };
                    (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0))
                })
                .collect();
            self.n = 0;
            self.mean.iter_mut().for_each(|v| *v = 0.0);
            self.m2.iter_mut().for_each(|v| *v = 0.0);
            self.counter += 1;
            return Some(var);
        }
        self.counter += 1;
        None
    }
}

struct Integrator<'a, T: LogDensity, R: Rng> {
    target: &'a T,
    rng: &'a mut R,
    step: f64,
    inv_metric: Vec<f64>,
    max_energy_error: f64,
    // per-transition accumulators
    h0: f64,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<'a, T: LogDensity, R: Rng> Integrator<'a, T, R> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(&self.inv_metric)
            .map(|(pi, mi)| pi * pi * mi)
            .sum::<f64>()
    }

    fn hamiltonian(&self, z: &Point) -> f64 {
        -z.logp + self.kinetic(&z.p)
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_metric).map(|(pi, mi)| pi * mi).collect()
    }

    fn sample_momentum(&mut self, z: &mut Point) {
        for (pi, mi) in z.p.iter_mut().zip(&self.inv_metric) {
            let n: f64 = self.rng.sample(StandardNormal);
            *pi = n / mi.sqrt();
        }
    }

    fn leapfrog(&self, z: &mut Point, eps: f64) {
        for i in 0..z.q.len() {
            z.p[i] += 0.5 * eps * z.g[i];
        }
        for i in 0..z.q.len() {
            z.q[i] += eps * self.inv_metric[i] * z.p[i];
        }
        z.logp = self.target.log_density_grad(&z.q, &mut z.g);
        if !z.logp.is_finite() || z.g.iter().any(|g| !g.is_finite()) {
            z.logp = f64::NEG_INFINITY;
            return;
        }
        for i in 0..z.q.len() {
            z.p[i] += 0.5 * eps * z.g[i];
        }
    }

    /// Heuristic initial step size: double or halve until the one-step
    /// acceptance probability crosses 0.8.
    fn init_step_size(&mut self, z0: &Point) -> Result<()> {
        let mut z = z0.clone();
        self.sample_momentum(&mut z);
        let h0 = self.hamiltonian(&z);
        self.leapfrog(&mut z, self.step);
        let mut h = self.hamiltonian(&z);
        if h.is_nan() {
            h = f64::INFINITY;
        }
        let threshold = 0.8f64.ln();
        let direction = if h0 - h > threshold { 1 } else { -1 };
        loop {
            let mut z = z0.clone();
            self.sample_momentum(&mut z);
            let h0 = self.hamiltonian(&z);
            self.leapfrog(&mut z, self.step);
            let mut h = self.hamiltonian(&z);
            if h.is_nan() {
                h = f64::INFINITY;
            }
            let delta = h0 - h;
            if direction == 1 && !(delta > threshold) {
                break;
            } else if direction == -1 && !(delta < threshold) {
                break;
            } else if direction == 1 {
                self.step *= 2.0;
            } else {
                self.step *= 0.5;
            }
            if self.step > 1e7 {
                return Err(Error::Initialisation(
                    "posterior is improper: step size diverged during initialisation".into(),
                ));
            }
            if self.step == 0.0 {
                return Err(Error::Initialisation(
                    "no acceptable step size: the log density is not smooth at the initial point".into(),
                ));
            }
        }
        Ok(())
    }

    fn criterion(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
        dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
    }

    #[allow(clippy::too_many_arguments)]
    fn build_tree(
        &mut self,
        depth: usize,
        z: &mut Point,
        z_propose: &mut Point,
        p_sharp_beg: &mut Vec<f64>,
        p_sharp_end: &mut Vec<f64>,
        rho: &mut [f64],
        p_beg: &mut Vec<f64>,
        p_end: &mut Vec<f64>,
        sign: f64,
        log_sum_weight: &mut f64,
    ) -> bool {
        if depth == 0 {
            self.leapfrog(z, sign * self.step);
            self.n_leapfrog += 1;
            let mut h = self.hamiltonian(z);
            if h.is_nan() {
                h = f64::INFINITY;
            }
            if h - self.h0 > self.max_energy_error {
                self.divergent = true;
            }
            *log_sum_weight = log_sum_exp(*log_sum_weight, self.h0 - h);
            self.sum_metro_prob += if self.h0 - h > 0.0 {
                1.0
            } else {
                (self.h0 - h).exp()
            };
            z_propose.clone_from(z);
            let ps = self.p_sharp(&z.p);
            p_sharp_beg.clone_from(&ps);
            *p_sharp_end = ps;
            for (r, p) in rho.iter_mut().zip(&z.p) {
                *r += p;
            }
            p_beg.clone_from(&z.p);
            p_end.clone_from(&z.p);
            return !self.divergent;
        }

        let dim = z.q.len();
        // Initial subtree.
        let mut p_sharp_init_end = vec![0.0; dim];
        let mut p_init_end = vec![0.0; dim];
        let mut rho_init = vec![0.0; dim];
        let mut lsw_init = f64::NEG_INFINITY;
        let valid_init = self.build_tree(
            depth - 1,
            z,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            sign,
            &mut lsw_init,
        );
        if !valid_init {
            return false;
        }

        // Final subtree.
        let mut z_propose_final = z.clone();
        let mut p_sharp_final_beg = vec![0.0; dim];
        let mut p_final_beg = vec![0.0; dim];
        let mut rho_final = vec![0.0; dim];
        let mut lsw_final = f64::NEG_INFINITY;
        let valid_final = self.build_tree(
            depth - 1,
            z,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            sign,
            &mut lsw_final,
        );
        if !valid_final {
            return false;
        }

        // Multinomial sample between the two subtrees.
        let lsw_subtree = log_sum_exp(lsw_init, lsw_final);
        *log_sum_weight = log_sum_exp(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree {
            *z_propose = z_propose_final;
        } else {
            let accept = (lsw_final - lsw_subtree).exp();
            let u: f64 = self.rng.random();
            if u < accept {
                *z_propose = z_propose_final;
            }
        }

        let rho_subtree: Vec<f64> = rho_init.iter().zip(&rho_final).map(|(a, b)| a + b).collect();
        for (r, s) in rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }
        let mut persist = Self::criterion(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_ext: Vec<f64> = rho_init.iter().zip(&p_final_beg).map(|(a, b)| a + b).collect();
        persist &= Self::criterion(p_sharp_beg, &p_sharp_final_beg, &rho_ext);
        let rho_ext: Vec<f64> = rho_final.iter().zip(&p_init_end).map(|(a, b)| a + b).collect();
        persist &= Self::criterion(&p_sharp_init_end, p_sharp_end, &rho_ext);
        persist
    }

    fn transition(&mut self, current: &Point, max_depth: usize) -> (Point, DrawStats) {
        let mut z = current.clone();
        self.sample_momentum(&mut z);
        self.h0 = self.hamiltonian(&z);
        self.n_leapfrog = 0;
        self.sum_metro_prob = 0.0;
        self.divergent = false;

        let dim = z.q.len();
        let mut z_fwd = z.clone();
        let mut z_bck = z.clone();
        let mut z_sample = z.clone();
        let mut z_propose = z.clone();

        let ps = self.p_sharp(&z.p);
        let mut p_sharp_fwd_fwd = ps.clone();
        let mut p_sharp_fwd_bck = ps.clone();
        let mut p_sharp_bck_fwd = ps.clone();
        let mut p_sharp_bck_bck = ps;
        let mut p_fwd_fwd = z.p.clone();
        let mut p_fwd_bck = z.p.clone();
        let mut p_bck_fwd = z.p.clone();
        let mut p_bck_bck = z.p.clone();
        let mut rho = z.p.clone();
        let mut log_sum_weight = 0.0;
        let mut depth = 0;

        while depth < max_depth {
            let mut rho_fwd = vec![0.0; dim];
            let mut rho_bck = vec![0.0; dim];
            let mut lsw_subtree = f64::NEG_INFINITY;
            let valid;
            let forward: f64 = self.rng.random();
            if forward > 0.5 {
                let mut zz = z_fwd.clone();
                rho_bck.clone_from(&rho);
                p_bck_fwd.clone_from(&p_fwd_bck);
                p_sharp_bck_fwd.clone_from(&p_sharp_fwd_bck);
                valid = self.build_tree(
                    depth,
                    &mut zz,
                    &mut z_propose,
                    &mut p_sharp_fwd_bck,
                    &mut p_sharp_fwd_fwd,
                    &mut rho_fwd,
                    &mut p_fwd_bck,
                    &mut p_fwd_fwd,
                    1.0,
                    &mut lsw_subtree,
                );
                z_fwd = zz;
            } else {
                let mut zz = z_bck.clone();
                rho_fwd.clone_from(&rho);
                p_fwd_bck.clone_from(&p_bck_fwd);
                p_sharp_fwd_bck.clone_from(&p_sharp_bck_fwd);
                valid = self.build_tree(
                    depth,
                    &mut zz,
                    &mut z_propose,
                    &mut p_sharp_bck_fwd,
                    &mut p_sharp_bck_bck,
                    &mut rho_bck,
                    &mut p_bck_fwd,
                    &mut p_bck_bck,
                    -1.0,
                    &mut lsw_subtree,
                );
                z_bck = zz;
            }
            if !valid {
                break;
            }
            depth += 1;

            if lsw_subtree > log_sum_weight {
                z_sample.clone_from(&z_propose);
            } else {
                let accept = (lsw_subtree - log_sum_weight).exp();
                let u: f64 = self.rng.random();
                if u < accept {
                    z_sample.clone_from(&z_propose);
                }
            }
            log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

            for i in 0..dim {
                rho[i] = rho_bck[i] + rho_fwd[i];
            }
            let mut persist = Self::criterion(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
            let rho_ext: Vec<f64> = rho_bck.iter().zip(&p_fwd_bck).map(|(a, b)| a + b).collect();
            persist &= Self::criterion(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_ext);
            let rho_ext: Vec<f64> = rho_fwd.iter().zip(&p_bck_fwd).map(|(a, b)| a + b).collect();
            persist &= Self::criterion(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_ext);
            if !persist {
                break;
            }
        }

        let accept_stat = if self.n_leapfrog > 0 {
            self.sum_metro_prob / self.n_leapfrog as f64
        } else {
            0.0
        };
        let energy = self.hamiltonian(&z_sample);
        let stats = DrawStats {
            lp: z_sample.logp,
            accept_stat,
            tree_depth: depth,
            n_leapfrog: self.n_leapfrog,
            divergent: self.divergent,
            energy,
        };
        (z_sample, stats)
    }
}

/// Runs one chain from `init`.
pub fn run_chain<T: LogDensity, R: Rng>(
    target: &T,
    init: Vec<f64>,
    settings: &NutsSettings,
    rng: &mut R,
) -> Result<ChainOutput> {
    let dim = target.dim();
    if init.len() != dim {
        return Err(Error::Initialisation(format!(
            "initial point has dimension {}, target has {dim}",
            init.len()
        )));
    }
    let mut current = Point::new(target, init);
    if !current.logp.is_finite() || current.g.iter().any(|g| !g.is_finite()) {
        return Err(Error::Initialisation("log density not finite at the initial point".into()));
    }

    let mut integ = Integrator {
        target,
        rng,
        step: 1.0,
        inv_metric: vec![1.0; dim],
        max_energy_error: settings.max_energy_error,
        h0: 0.0,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };
    integ.init_step_size(&current)?;
    let mut averaging = DualAveraging::new(settings.target_accept);
    averaging.restart(integ.step);
    let mut windows = WindowSchedule::new(settings.iter_warmup, dim, settings.adapt_metric);

    let mut draws = Vec::with_capacity(settings.iter_sampling);
    let mut stats = Vec::with_capacity(settings.iter_sampling);
    for it in 0..settings.iter_warmup + settings.iter_sampling {
        let (next, st) = integ.transition(&current, settings.max_depth);
        current = next;
        if it < settings.iter_warmup {
            integ.step = averaging.learn(st.accept_stat);
            if let Some(var) = windows.observe(&current.q) {
                integ.inv_metric = var;
                integ.init_step_size(&current)?;
                averaging.restart(integ.step);
            }
            if it + 1 == settings.iter_warmup {
                integ.step = averaging.finish();
            }
        } else {
            draws.push(current.q.clone());
            stats.push(st);
        }
    }
    Ok(ChainOutput {
        draws,
        stats,
        step_size: integ.step,
        inv_metric: integ.inv_metric,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

//! Genetic-programming candidate search.
//!
//! A steady population of candidate tuples evolves under tournament
//! selection, single-point body crossover, and per-gene mutation. Fitness is
//! the number of stored inputs the tuple satisfies. The population persists
//! across CEGIS iterations (new counterexamples just re-score it) and is
//! only reset when the active width changes, so learning carries over.
//!
//! Genomes carry up to `slack` extra instructions beyond the shape's length
//! budget; a full-fitness individual is accepted only if canonicalisation
//! brings its total program length within the budget (and its constant count
//! within its length). Exhaustion of a generation budget proves nothing —
//! this strategy never closes a shape.

use super::{ShapeCtx, StepOutcome, Strategy, StrategyKind};
use crate::formula::BodyEvaluator;
use crate::lang::{canonicalize, width_mask, Instruction, Opcode, Operand, Program};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct GpParams {
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elite: usize,
    pub slack: usize,
    /// Generations per shape before giving up (never proves emptiness).
    pub max_shape_generations: u64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            population: 200,
            tournament: 4,
            crossover_rate: 0.9,
            mutation_rate: 0.05,
            elite: 2,
            slack: 2,
            max_shape_generations: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub programs: Vec<Program>,
    pub fitness: usize,
}

pub struct GpStrategy {
    rng: ChaCha12Rng,
    params: GpParams,
    population: Vec<Individual>,
    /// Total generations evolved since construction (persists across shapes).
    pub generation: u64,
    shape_generations: u64,
    pop_width: Option<u32>,
    evaluator: BodyEvaluator,
}

fn random_operand(rng: &mut impl Rng, gamma: usize, arity: usize, t: usize) -> Operand {
    let d = gamma + arity + t;
    debug_assert!(d > 0);
    let idx = rng.random_range(0..d);
    if idx < gamma {
        Operand::Const(idx)
    } else if idx < gamma + arity {
        Operand::Input(idx - gamma)
    } else {
        Operand::Temp(idx - gamma - arity)
    }
}

/// Clamp every operand of `body` into its position's legal domain, mapping
/// out-of-range references into range by modulus.
fn repair_body(body: &mut [Instruction], gamma: usize, arity: usize) {
    for (t, instr) in body.iter_mut().enumerate() {
        for o in instr.operands.iter_mut() {
            *o = match *o {
                Operand::Const(k) if gamma == 0 => Operand::Input(k % arity),
                Operand::Const(k) => Operand::Const(k % gamma),
                Operand::Input(x) => Operand::Input(x % arity),
                Operand::Temp(_) if t == 0 => Operand::Input(0),
                Operand::Temp(tt) => Operand::Temp(tt % t),
            };
        }
    }
}

impl GpStrategy {
    pub fn new(seed: u64, params: GpParams) -> Self {
        GpStrategy {
            rng: ChaCha12Rng::seed_from_u64(seed),
            params,
            population: Vec::new(),
            generation: 0,
            shape_generations: 0,
            pop_width: None,
            evaluator: BodyEvaluator::new(),
        }
    }

    fn random_program(
        &mut self,
        arity: usize,
        out_count: usize,
        target_len: usize,
        target_consts: usize,
        w: u32,
        opcodes: &[Opcode],
    ) -> Program {
        let min_len = out_count.max(1);
        let max_len = (target_len + self.params.slack).max(min_len);
        let len = self.rng.random_range(min_len..=max_len);
        let gamma = self
            .rng
            .random_range(0..=(target_consts + self.params.slack).min(len));
        let mask = width_mask(w);
        let constants: Vec<u64> = (0..gamma).map(|_| self.rng.random::<u64>() & mask).collect();
        let mut body = Vec::with_capacity(len);
        for t in 0..len {
            let op = opcodes[self.rng.random_range(0..opcodes.len())];
            let operands: Vec<Operand> = (0..op.arity())
                .map(|_| random_operand(&mut self.rng, gamma, arity, t))
                .collect();
            body.push(Instruction::new(op, operands));
        }
        Program::new(arity, out_count, w, constants, body)
    }

    fn random_individual(&mut self, ctx: &ShapeCtx<'_>) -> Individual {
        let split_idx = if ctx.splits.is_empty() {
            None
        } else {
            Some(self.rng.random_range(0..ctx.splits.len()))
        };
        let mut programs: Vec<Option<Program>> = vec![None; ctx.instance.functions.len()];
        for (i, sym) in ctx.prog_syms.iter().enumerate() {
            let (tl, tc) = match split_idx {
                None => (1, 0),
                Some(si) => (ctx.splits[si].lengths[i], ctx.splits[si].consts[i]),
            };
            programs[sym.func] =
                Some(self.random_program(sym.arity, sym.out_count, tl, tc, ctx.w, ctx.opcodes));
        }
        let mask = width_mask(ctx.w);
        for &func in ctx.value_syms {
            let v = self.rng.random::<u64>() & mask;
            programs[func] = Some(Program::degenerate(0, ctx.w, vec![v]));
        }
        Individual {
            programs: programs.into_iter().map(|p| p.expect("all slots filled")).collect(),
            fitness: 0,
        }
    }

    fn score(&mut self, ctx: &ShapeCtx<'_>, ind: &mut Individual) {
        let mut fit = 0;
        for input in ctx.inputs {
            if let Ok(true) = self.evaluator.evaluate(ctx.body, &ind.programs, input, ctx.w) {
                fit += 1;
            }
        }
        ind.fitness = fit;
    }

    /// Tournament selection: best of `tournament` random picks.
    fn select(&mut self) -> usize {
        let mut best = self.rng.random_range(0..self.population.len());
        for _ in 1..self.params.tournament {
            let cand = self.rng.random_range(0..self.population.len());
            if self.population[cand].fitness > self.population[best].fitness {
                best = cand;
            }
        }
        best
    }

    /// Single-point crossover in one symbol's body; other symbols and value
    /// words are picked uniformly per parent.
    fn crossover(&mut self, ctx: &ShapeCtx<'_>, a: &Individual, b: &Individual) -> Individual {
        let mut programs = Vec::with_capacity(a.programs.len());
        let splice_sym = if ctx.prog_syms.is_empty() {
            usize::MAX
        } else {
            ctx.prog_syms[self.rng.random_range(0..ctx.prog_syms.len())].func
        };
        for (f, (pa, pb)) in a.programs.iter().zip(&b.programs).enumerate() {
            if f == splice_sym && !pa.body.is_empty() && !pb.body.is_empty() {
                let cut_a = self.rng.random_range(0..=pa.body.len());
                let cut_b = self.rng.random_range(0..=pb.body.len());
                let mut body: Vec<Instruction> = pa.body[..cut_a].to_vec();
                body.extend_from_slice(&pb.body[cut_b..]);
                let min_len = pa.out_count.max(1);
                while body.len() < min_len {
                    let t = body.len();
                    let op = ctx.opcodes[self.rng.random_range(0..ctx.opcodes.len())];
                    let operands: Vec<Operand> = (0..op.arity())
                        .map(|_| random_operand(&mut self.rng, pa.constants.len(), pa.arity, t))
                        .collect();
                    body.push(Instruction::new(op, operands));
                }
                let max_len = (ctx.l + self.params.slack).max(min_len);
                body.truncate(max_len.max(min_len));
                repair_body(&mut body, pa.constants.len(), pa.arity);
                programs.push(Program::new(
                    pa.arity,
                    pa.out_count,
                    pa.width,
                    pa.constants.clone(),
                    body,
                ));
            } else if self.rng.random_bool(0.5) {
                programs.push(pa.clone());
            } else {
                programs.push(pb.clone());
            }
        }
        Individual { programs, fitness: 0 }
    }

    /// Per-gene mutation: opcodes, operands, table constants, value words.
    fn mutate(&mut self, ctx: &ShapeCtx<'_>, ind: &mut Individual) {
        let rate = self.params.mutation_rate;
        let mask = width_mask(ctx.w);
        let value_syms: &[usize] = ctx.value_syms;
        for (f, p) in ind.programs.iter_mut().enumerate() {
            if value_syms.contains(&f) {
                if self.rng.random_bool(rate) {
                    p.constants[0] = self.rng.random::<u64>() & mask;
                }
                continue;
            }
            let gamma = p.constants.len();
            for c in p.constants.iter_mut() {
                if self.rng.random_bool(rate) {
                    *c = self.rng.random::<u64>() & mask;
                }
            }
            let arity = p.arity;
            for t in 0..p.body.len() {
                if self.rng.random_bool(rate) {
                    let op = ctx.opcodes[self.rng.random_range(0..ctx.opcodes.len())];
                    let mut operands = p.body[t].operands.clone();
                    operands.resize_with(op.arity(), || {
                        random_operand(&mut self.rng, gamma, arity, t)
                    });
                    operands.truncate(op.arity());
                    p.body[t] = Instruction::new(op, operands);
                }
                for oi in 0..p.body[t].operands.len() {
                    if self.rng.random_bool(rate) {
                        p.body[t].operands[oi] = random_operand(&mut self.rng, gamma, arity, t);
                    }
                }
            }
            repair_body(&mut p.body, gamma, arity);
        }
    }

    /// Full-fitness individuals become candidates only if canonicalisation
    /// fits the (l, c)-walk: total canonical length within the budget and
    /// constants within the length (value symbols are outside the budget).
    fn accept(&self, ctx: &ShapeCtx<'_>, ind: &Individual) -> Option<Vec<Program>> {
        let mut canonical = Vec::with_capacity(ind.programs.len());
        let mut total_len = 0;
        let mut total_consts = 0;
        for (f, p) in ind.programs.iter().enumerate() {
            if ctx.value_syms.contains(&f) {
                canonical.push(p.clone());
                continue;
            }
            if p.validate().is_err() {
                return None;
            }
            let cp = canonicalize(p)?;
            total_len += cp.len();
            total_consts += cp.constants.len();
            canonical.push(cp);
        }
        if total_len > ctx.l || total_consts > total_len.max(1) {
            return None;
        }
        Some(canonical)
    }

    /// One generation: score, try acceptance, breed the next population.
    /// Returns an accepted candidate if one emerged.
    pub fn evolve_step(&mut self, ctx: &ShapeCtx<'_>) -> Option<Vec<Program>> {
        // Fill and score.
        while self.population.len() < self.params.population {
            let ind = self.random_individual(ctx);
            self.population.push(ind);
        }
        let mut pop = std::mem::take(&mut self.population);
        for ind in pop.iter_mut() {
            self.score(ctx, ind);
        }
        self.population = pop;
        // Acceptance: scan full-fitness individuals.
        let full = ctx.inputs.len();
        for i in 0..self.population.len() {
            if self.population[i].fitness == full {
                if let Some(candidate) = self.accept(ctx, &self.population[i]) {
                    return Some(candidate);
                }
            }
        }
        // Breed. Stable sort keeps determinism on fitness ties.
        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.population[i].fitness));
        let mut next: Vec<Individual> = order
            .iter()
            .take(self.params.elite)
            .map(|&i| self.population[i].clone())
            .collect();
        while next.len() < self.params.population {
            let pa = self.select();
            let child = if self.rng.random_bool(self.params.crossover_rate) {
                let pb = self.select();
                let (a, b) = (self.population[pa].clone(), self.population[pb].clone());
                self.crossover(ctx, &a, &b)
            } else {
                self.population[pa].clone()
            };
            let mut child = child;
            self.mutate(ctx, &mut child);
            next.push(child);
        }
        self.population = next;
        self.generation += 1;
        self.shape_generations += 1;
        None
    }

    #[cfg(test)]
    fn best_fitness(&self) -> usize {
        self.population.iter().map(|i| i.fitness).max().unwrap_or(0)
    }

    #[cfg(test)]
    fn population_fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let mut h = DefaultHasher::new();
        for ind in &self.population {
            ind.programs.hash(&mut h);
        }
        h.finish()
    }
}

impl Strategy for GpStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Gp
    }

    fn begin_shape(&mut self, ctx: &ShapeCtx<'_>) {
        self.shape_generations = 0;
        if self.pop_width != Some(ctx.w) {
            self.population.clear();
            self.pop_width = Some(ctx.w);
        }
    }

    fn step(&mut self, ctx: &ShapeCtx<'_>, budget: u64) -> StepOutcome {
        if self.shape_generations >= self.params.max_shape_generations {
            return StepOutcome::Exhausted { proves_empty: false };
        }
        for _ in 0..budget {
            if let Some(candidate) = self.evolve_step(ctx) {
                return StepOutcome::Candidate(candidate);
            }
            if self.shape_generations >= self.params.max_shape_generations {
                return StepOutcome::Exhausted { proves_empty: false };
            }
        }
        StepOutcome::Working
    }
}

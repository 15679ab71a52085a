//! Chromosome representation and variation operators.
//!
//! A chromosome is a fixed-length sequence of genes in three-address form:
//! each gene is either a terminal (an input variable or a pooled constant)
//! or a function applied to genes at strictly lower addresses. Gene 0 is
//! always a terminal, which makes every chromosome syntactically valid by
//! construction and keeps decoding cycle-free. A chromosome also carries an
//! evolvable constant pool and a real-valued threshold used by the
//! evolved-threshold binary strategy.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;
use core::str::FromStr;

use rand::Rng;

/// Function symbols available to chromosomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Exp,
    Ln,
    /// 4-ary conditional: `ifless(a, b, c, d)` yields `c` where `a < b`, else `d`.
    IfLess,
}

impl Op {
    pub const ALL: [Op; 8] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Sin,
        Op::Exp,
        Op::Ln,
        Op::IfLess,
    ];

    pub fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
            Op::Sin | Op::Exp | Op::Ln => 1,
            Op::IfLess => 4,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Sin => "sin",
            Op::Exp => "exp",
            Op::Ln => "ln",
            Op::IfLess => "ifless",
        }
    }

    /// Parses an operator token. `a<b?c:d` is accepted as an alias for
    /// `ifless` so that configuration files can spell the conditional the
    /// same way parameter tables usually do.
    pub fn from_token(tok: &str) -> Option<Op> {
        match tok {
            "+" => Some(Op::Add),
            "-" => Some(Op::Sub),
            "*" => Some(Op::Mul),
            "/" => Some(Op::Div),
            "sin" => Some(Op::Sin),
            "exp" => Some(Op::Exp),
            "ln" => Some(Op::Ln),
            "ifless" | "a<b?c:d" => Some(Op::IfLess),
            _ => None,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One chromosome entry: a terminal or a function over earlier genes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gene {
    /// 0-based input feature index.
    Variable(usize),
    /// 0-based index into the chromosome's constant pool.
    Constant(usize),
    /// Function applied to genes at the given (strictly lower) addresses.
    Function { op: Op, args: Vec<usize> },
}

/// Fixed-length multi-expression chromosome.
///
/// All addresses are 0-based, including in the text format produced by
/// [`Chromosome::to_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<Gene>,
    pub constants: Vec<f64>,
    /// Decision threshold used only by the evolved-threshold binary strategy.
    pub threshold: f64,
}

/// Symbols available when sampling random genes, with their sampling biases.
///
/// The three probabilities need not sum to one; sampling normalizes them.
/// A bias is ignored whenever its symbol class is unavailable (no constants
/// configured, empty function set, or position 0 which must be a terminal).
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSet {
    pub functions: Vec<Op>,
    pub num_variables: usize,
    pub num_constants: usize,
    pub p_function: f64,
    pub p_variable: f64,
    pub p_constant: f64,
}

impl PrimitiveSet {
    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.num_variables + self.num_constants == 0 {
            return Err(GenomeError::NoTerminals);
        }
        for p in [self.p_function, self.p_variable, self.p_constant] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenomeError::BadProbability(p));
            }
        }
        if self.p_function + self.p_variable + self.p_constant <= 0.0 {
            return Err(GenomeError::ZeroProbabilityMass);
        }
        Ok(())
    }
}

/// How two parents are recombined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverMode {
    /// One cut point chosen on a gene boundary; suffixes are swapped.
    OnePoint,
    /// Every gene, constant slot and the threshold taken from either parent
    /// with probability 1/2.
    Uniform,
}

impl FromStr for CrossoverMode {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, GenomeError> {
        match s {
            "one_point" => Ok(CrossoverMode::OnePoint),
            "uniform" => Ok(CrossoverMode::Uniform),
            _ => Err(GenomeError::UnknownCrossoverMode),
        }
    }
}

impl fmt::Display for CrossoverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrossoverMode::OnePoint => "one_point",
            CrossoverMode::Uniform => "uniform",
        })
    }
}

/// Parameters of the variation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationParams {
    pub crossover_mode: CrossoverMode,
    pub p_crossover: f64,
    /// Per-symbol mutation probability, applied independently to every gene,
    /// every constant and the threshold.
    pub p_mutation: f64,
    /// Half-width of the uniform perturbation applied to mutated constants.
    /// Zero freezes the constant pool.
    pub constant_delta: f64,
    pub constants_interval: (f64, f64),
    /// When false, mutated constants are clamped back into the initial
    /// interval.
    pub constants_may_leave_interval: bool,
    pub threshold_delta: f64,
}

impl VariationParams {
    pub fn validate(&self) -> Result<(), GenomeError> {
        for p in [self.p_crossover, self.p_mutation] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenomeError::BadProbability(p));
            }
        }
        for delta in [self.constant_delta, self.threshold_delta] {
            if delta.is_nan() || delta < 0.0 {
                return Err(GenomeError::BadDelta);
            }
        }
        let (lo, hi) = self.constants_interval;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(GenomeError::BadInterval);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenomeError {
    #[error("chromosome length must be at least 1")]
    EmptyLength,
    #[error("no terminal symbols available: need at least one variable or constant")]
    NoTerminals,
    #[error("sampling probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("function, variable and constant probabilities sum to zero")]
    ZeroProbabilityMass,
    #[error("constants interval must be finite with lo <= hi")]
    BadInterval,
    #[error("mutation deltas must be non-negative")]
    BadDelta,
    #[error("parents have mismatched length or constant pool size")]
    ShapeMismatch,
    #[error("unknown crossover mode (expected one_point or uniform)")]
    UnknownCrossoverMode,
}

/// A structural rule broken by a chromosome, reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    FirstGeneNotTerminal,
    /// A function argument addresses the gene itself or a later gene.
    ForwardReference { gene: usize, arg: usize },
    WrongArity { gene: usize, op: Op, got: usize },
    VariableOutOfRange { gene: usize, index: usize },
    ConstantOutOfRange { gene: usize, index: usize },
    ConstantPoolSize { expected: usize, got: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FirstGeneNotTerminal => write!(f, "first gene not terminal"),
            Violation::ForwardReference { gene, arg } => {
                write!(f, "forward reference: gene {gene} addresses {arg}")
            }
            Violation::WrongArity { gene, op, got } => write!(
                f,
                "gene {gene}: {op} takes {} arguments, got {got}",
                op.arity()
            ),
            Violation::VariableOutOfRange { gene, index } => {
                write!(f, "gene {gene}: variable x{index} out of range")
            }
            Violation::ConstantOutOfRange { gene, index } => {
                write!(f, "gene {gene}: constant c{index} out of range")
            }
            Violation::ConstantPoolSize { expected, got } => {
                write!(f, "constant pool has {got} entries, expected {expected}")
            }
        }
    }
}

/// Checks every structural invariant and returns all violations found.
pub fn validate(c: &Chromosome, prims: &PrimitiveSet) -> Vec<Violation> {
    let mut out = Vec::new();
    if matches!(c.genes.first(), Some(Gene::Function { .. })) {
        out.push(Violation::FirstGeneNotTerminal);
    }
    if c.constants.len() != prims.num_constants {
        out.push(Violation::ConstantPoolSize {
            expected: prims.num_constants,
            got: c.constants.len(),
        });
    }
    for (i, gene) in c.genes.iter().enumerate() {
        match gene {
            Gene::Variable(v) => {
                if *v >= prims.num_variables {
                    out.push(Violation::VariableOutOfRange { gene: i, index: *v });
                }
            }
            Gene::Constant(k) => {
                if *k >= c.constants.len() {
                    out.push(Violation::ConstantOutOfRange { gene: i, index: *k });
                }
            }
            Gene::Function { op, args } => {
                if args.len() != op.arity() {
                    out.push(Violation::WrongArity {
                        gene: i,
                        op: *op,
                        got: args.len(),
                    });
                }
                for &a in args {
                    if a >= i {
                        out.push(Violation::ForwardReference { gene: i, arg: a });
                    }
                }
            }
        }
    }
    out
}

/// Samples a structurally valid gene for the given chromosome position.
///
/// Position 0 samples terminals only. Unavailable symbol classes get zero
/// weight; if every weight masks to zero the draw falls back to a uniform
/// choice over the available terminals.
fn random_gene(prims: &PrimitiveSet, position: usize, rng: &mut impl Rng) -> Gene {
    let p_fun = if position == 0 || prims.functions.is_empty() {
        0.0
    } else {
        prims.p_function
    };
    let p_var = if prims.num_variables == 0 {
        0.0
    } else {
        prims.p_variable
    };
    let p_con = if prims.num_constants == 0 {
        0.0
    } else {
        prims.p_constant
    };

    let total = p_fun + p_var + p_con;
    if total <= 0.0 {
        let k = rng.gen_range(0..prims.num_variables + prims.num_constants);
        return if k < prims.num_variables {
            Gene::Variable(k)
        } else {
            Gene::Constant(k - prims.num_variables)
        };
    }

    let draw = rng.gen::<f64>() * total;
    if draw < p_fun {
        let op = prims.functions[rng.gen_range(0..prims.functions.len())];
        let args = (0..op.arity()).map(|_| rng.gen_range(0..position)).collect();
        Gene::Function { op, args }
    } else if draw < p_fun + p_var {
        Gene::Variable(rng.gen_range(0..prims.num_variables))
    } else {
        Gene::Constant(rng.gen_range(0..prims.num_constants))
    }
}

fn uniform_in(interval: (f64, f64), rng: &mut impl Rng) -> f64 {
    interval.0 + rng.gen::<f64>() * (interval.1 - interval.0)
}

impl Chromosome {
    /// Builds a random chromosome of the given length.
    ///
    /// Constants are sampled uniformly from `constants_interval` and the
    /// threshold uniformly from [0, 1]. The result is deterministic in the
    /// generator state.
    pub fn random(
        prims: &PrimitiveSet,
        length: usize,
        constants_interval: (f64, f64),
        rng: &mut impl Rng,
    ) -> Result<Chromosome, GenomeError> {
        prims.validate()?;
        if length == 0 {
            return Err(GenomeError::EmptyLength);
        }
        if !constants_interval.0.is_finite()
            || !constants_interval.1.is_finite()
            || constants_interval.0 > constants_interval.1
        {
            return Err(GenomeError::BadInterval);
        }
        let genes = (0..length).map(|i| random_gene(prims, i, rng)).collect();
        let constants = (0..prims.num_constants)
            .map(|_| uniform_in(constants_interval, rng))
            .collect();
        let threshold = rng.gen::<f64>();
        Ok(Chromosome {
            genes,
            constants,
            threshold,
        })
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// Mutates every symbol independently with probability `p_mutation`.
///
/// Mutated genes are re-sampled from the primitive set (gene 0 among
/// terminals only), mutated constants are perturbed by a uniform value in
/// `[-constant_delta, constant_delta]` and the threshold by a uniform value
/// in `[-threshold_delta, threshold_delta]`. Constants are clamped back into
/// the initial interval unless `constants_may_leave_interval` is set.
pub fn mutate(
    c: &Chromosome,
    prims: &PrimitiveSet,
    params: &VariationParams,
    rng: &mut impl Rng,
) -> Chromosome {
    let mut out = c.clone();
    for i in 0..out.genes.len() {
        if rng.gen_bool(params.p_mutation) {
            out.genes[i] = random_gene(prims, i, rng);
        }
    }
    let (lo, hi) = params.constants_interval;
    for value in &mut out.constants {
        if rng.gen_bool(params.p_mutation) {
            *value += (rng.gen::<f64>() * 2.0 - 1.0) * params.constant_delta;
            if !params.constants_may_leave_interval {
                *value = value.clamp(lo, hi);
            }
        }
    }
    if rng.gen_bool(params.p_mutation) {
        out.threshold += (rng.gen::<f64>() * 2.0 - 1.0) * params.threshold_delta;
    }
    out
}

/// Recombines two parents of identical shape.
///
/// One-point mode picks a cut on a gene boundary (never inside a gene) and
/// swaps suffixes; the constant pools are crossed at an independently chosen
/// cut and the thresholds are swapped with probability 1/2. Uniform mode
/// draws every position from either parent with probability 1/2, the second
/// offspring taking the complement. Because genes keep their positions, the
/// offspring are valid whenever the parents are.
pub fn crossover(
    a: &Chromosome,
    b: &Chromosome,
    mode: CrossoverMode,
    rng: &mut impl Rng,
) -> Result<(Chromosome, Chromosome), GenomeError> {
    if a.genes.len() != b.genes.len() || a.constants.len() != b.constants.len() {
        return Err(GenomeError::ShapeMismatch);
    }
    let mut o1 = a.clone();
    let mut o2 = b.clone();
    match mode {
        CrossoverMode::OnePoint => {
            let cut = rng.gen_range(0..=a.genes.len());
            for i in cut..a.genes.len() {
                o1.genes[i] = b.genes[i].clone();
                o2.genes[i] = a.genes[i].clone();
            }
            let cut = rng.gen_range(0..=a.constants.len());
            for i in cut..a.constants.len() {
                o1.constants[i] = b.constants[i];
                o2.constants[i] = a.constants[i];
            }
            if rng.gen_bool(0.5) {
                o1.threshold = b.threshold;
                o2.threshold = a.threshold;
            }
        }
        CrossoverMode::Uniform => {
            for i in 0..a.genes.len() {
                if rng.gen_bool(0.5) {
                    o1.genes[i] = b.genes[i].clone();
                    o2.genes[i] = a.genes[i].clone();
                }
            }
            for i in 0..a.constants.len() {
                if rng.gen_bool(0.5) {
                    o1.constants[i] = b.constants[i];
                    o2.constants[i] = a.constants[i];
                }
            }
            if rng.gen_bool(0.5) {
                o1.threshold = b.threshold;
                o2.threshold = a.threshold;
            }
        }
    }
    Ok((o1, o2))
}

// --- text format ---------------------------------------------------------
//
// One gene per line with its 0-based address, then the constant pool and the
// threshold:
//
//     0: x0
//     1: c0
//     2: + 0, 1
//     3: ifless 0, 1, 2, 0
//     constants: 2.5000000000000000e-1
//     threshold: 5.0000000000000000e-1
//
// Reals are printed with 17 significant digits so parsing is lossless.

pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

fn text_err(line: usize, message: impl Into<String>) -> TextError {
    TextError {
        line,
        message: message.into(),
    }
}

impl Chromosome {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, gene) in self.genes.iter().enumerate() {
            match gene {
                Gene::Variable(v) => out.push_str(&format!("{i}: x{v}\n")),
                Gene::Constant(k) => out.push_str(&format!("{i}: c{k}\n")),
                Gene::Function { op, args } => {
                    out.push_str(&format!("{i}: {op} "));
                    for (j, a) in args.iter().enumerate() {
                        if j > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&format!("{a}"));
                    }
                    out.push('\n');
                }
            }
        }
        out.push_str("constants:");
        for v in &self.constants {
            out.push(' ');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
        out.push_str(&format!("threshold: {}\n", format_f64(self.threshold)));
        out
    }

    /// Parses the text format. The reverse of [`Chromosome::to_text`];
    /// consumes exactly the chromosome block and ignores anything after the
    /// threshold line, so it can read the front of a model file as well.
    pub fn from_text(text: &str) -> Result<Chromosome, TextError> {
        let mut genes = Vec::new();
        let mut constants = None;
        let mut threshold = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("constants:") {
                let values: Result<Vec<f64>, _> = rest
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .map_err(|_| text_err(lineno, format!("bad constant `{tok}`")))
                    })
                    .collect();
                constants = Some(values?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("threshold:") {
                let tok = rest.trim();
                threshold = Some(
                    tok.parse::<f64>()
                        .map_err(|_| text_err(lineno, format!("bad threshold `{tok}`")))?,
                );
                break; // chromosome block ends here
            }
            let (addr, body) = line
                .split_once(':')
                .ok_or_else(|| text_err(lineno, "expected `address: gene`"))?;
            let addr: usize = addr
                .trim()
                .parse()
                .map_err(|_| text_err(lineno, format!("bad gene address `{}`", addr.trim())))?;
            if addr != genes.len() {
                return Err(text_err(
                    lineno,
                    format!("gene address {addr} out of order, expected {}", genes.len()),
                ));
            }
            genes.push(parse_gene(body.trim(), lineno)?);
        }
        let constants = constants.ok_or_else(|| text_err(0, "missing constants line"))?;
        let threshold = threshold.ok_or_else(|| text_err(0, "missing threshold line"))?;
        if genes.is_empty() {
            return Err(text_err(0, "chromosome has no genes"));
        }
        Ok(Chromosome {
            genes,
            constants,
            threshold,
        })
    }
}

fn parse_gene(body: &str, lineno: usize) -> Result<Gene, TextError> {
    let mut parts = body.splitn(2, char::is_whitespace);
    let head = parts.next().unwrap_or("");
    let rest = parts.next().unwrap_or("").trim();

    if let Some(num) = head.strip_prefix('x') {
        if let Ok(v) = num.parse::<usize>() {
            if !rest.is_empty() {
                return Err(text_err(lineno, "unexpected tokens after variable"));
            }
            return Ok(Gene::Variable(v));
        }
    }
    if let Some(num) = head.strip_prefix('c') {
        if let Ok(k) = num.parse::<usize>() {
            if !rest.is_empty() {
                return Err(text_err(lineno, "unexpected tokens after constant"));
            }
            return Ok(Gene::Constant(k));
        }
    }
    let op = Op::from_token(head)
        .ok_or_else(|| text_err(lineno, format!("unknown gene symbol `{head}`")))?;
    let args: Result<Vec<usize>, _> = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| text_err(lineno, format!("bad argument `{}`", s.trim())))
        })
        .collect();
    let args = args?;
    if args.len() != op.arity() {
        return Err(text_err(
            lineno,
            format!("{op} takes {} arguments, got {}", op.arity(), args.len()),
        ));
    }
    Ok(Gene::Function { op, args })
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

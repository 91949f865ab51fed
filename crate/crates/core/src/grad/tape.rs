use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::{sigmoid_f64, softplus_f64, Real};
use super::GradError;

/// Primitive recorded on the tape. Constant operands of the mixed
/// `Var ∘ f64` forms are stored inline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Input,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    AddConst(f64),
    SubConst(f64),
    MulConst(f64),
    DivConst(f64),
    Neg,
    Tanh,
    Atanh,
    Sinh,
    Cosh,
    Acosh,
    Asinh,
    Exp,
    Ln,
    Sqrt,
    Sigmoid,
    Softplus,
    Abs,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    op: Op,
    a: u32,
    b: u32,
    value: f64,
}

/// Append-only record of scalar primitives for reverse-mode differentiation.
///
/// Variables created with [`Tape::var`] are the differentiable inputs;
/// [`Tape::grad`] returns d(output)/d(input) in creation order.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    inputs: RefCell<Vec<u32>>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("nodes", &self.len())
            .field("inputs", &self.inputs.borrow().len())
            .finish()
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({})", self.idx, self.val)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(nodes)),
            inputs: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops all recorded nodes while keeping the allocation.
    pub fn clear(&mut self) {
        self.nodes.get_mut().clear();
        self.inputs.get_mut().clear();
    }

    fn push(&self, op: Op, a: u32, b: u32, value: f64) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let idx = u32::try_from(nodes.len()).expect("tape exceeds u32 nodes");
        nodes.push(Node { op, a, b, value });
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    /// Registers a differentiable input.
    pub fn var(&self, value: f64) -> Var<'_> {
        let v = self.push(Op::Input, 0, 0, value);
        self.inputs.borrow_mut().push(v.idx);
        v
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(Op::Const, 0, 0, value)
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.borrow().len()
    }

    fn owns(&self, v: &Var<'_>) -> bool {
        std::ptr::eq(self, v.tape) && (v.idx as usize) < self.len()
    }

    /// Gradient of `output` with respect to every input, in creation order.
    pub fn grad(&self, output: Var<'_>) -> Result<Vec<f64>, GradError> {
        let mut out = vec![0.0; self.num_inputs()];
        self.accumulate_grad(output, 1.0, &mut out)?;
        Ok(out)
    }

    /// Adds `weight * d(output)/d(input)` into `acc`.
    pub fn accumulate_grad(
        &self,
        output: Var<'_>,
        weight: f64,
        acc: &mut [f64],
    ) -> Result<(), GradError> {
        if !self.owns(&output) {
            return Err(GradError::ForeignOutput);
        }
        let inputs = self.inputs.borrow();
        if acc.len() != inputs.len() {
            return Err(GradError::LengthMismatch {
                expected: inputs.len(),
                got: acc.len(),
            });
        }
        let nodes = self.nodes.borrow();
        let last = output.idx as usize;
        let mut adj = vec![0.0; last + 1];
        adj[last] = weight;
        for i in (0..=last).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let node = nodes[i];
            let (a, b) = (node.a as usize, node.b as usize);
            let xa = || nodes[a].value;
            match node.op {
                Op::Input | Op::Const => {}
                Op::Add => {
                    adj[a] += g;
                    adj[b] += g;
                }
                Op::Sub => {
                    adj[a] += g;
                    adj[b] -= g;
                }
                Op::Mul => {
                    adj[a] += g * nodes[b].value;
                    adj[b] += g * nodes[a].value;
                }
                Op::Div => {
                    let y = nodes[b].value;
                    adj[a] += g / y;
                    adj[b] -= g * node.value / y;
                }
                Op::AddConst(_) | Op::SubConst(_) => adj[a] += g,
                Op::MulConst(c) => adj[a] += g * c,
                Op::DivConst(c) => adj[a] += g / c,
                Op::Neg => adj[a] -= g,
                Op::Tanh => adj[a] += g * (1.0 - node.value * node.value),
                Op::Atanh => {
                    let x = xa();
                    adj[a] += g / (1.0 - x * x);
                }
                Op::Sinh => adj[a] += g * xa().cosh(),
                Op::Cosh => adj[a] += g * xa().sinh(),
                Op::Acosh => {
                    let x = xa();
                    adj[a] += g / (x * x - 1.0).sqrt();
                }
                Op::Asinh => {
                    let x = xa();
                    adj[a] += g / (x * x + 1.0).sqrt();
                }
                Op::Exp => adj[a] += g * node.value,
                Op::Ln => adj[a] += g / xa(),
                Op::Sqrt => adj[a] += g * 0.5 / node.value,
                Op::Sigmoid => adj[a] += g * node.value * (1.0 - node.value),
                Op::Softplus => adj[a] += g * sigmoid_f64(xa()),
                Op::Abs => {
                    let x = xa();
                    if x > 0.0 {
                        adj[a] += g;
                    } else if x < 0.0 {
                        adj[a] -= g;
                    }
                }
            }
        }
        for (slot, &idx) in acc.iter_mut().zip(inputs.iter()) {
            if (idx as usize) <= last {
                *slot += adj[idx as usize];
            }
        }
        Ok(())
    }

    /// Recomputes every node from the recorded leaves and operations.
    pub fn replay(&self) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut vals: Vec<f64> = Vec::with_capacity(nodes.len());
        for node in nodes.iter() {
            let a = || vals[node.a as usize];
            let v = match node.op {
                Op::Input | Op::Const => node.value,
                Op::Add => a() + vals[node.b as usize],
                Op::Sub => a() - vals[node.b as usize],
                Op::Mul => a() * vals[node.b as usize],
                Op::Div => a() / vals[node.b as usize],
                Op::AddConst(c) => a() + c,
                Op::SubConst(c) => a() - c,
                Op::MulConst(c) => a() * c,
                Op::DivConst(c) => a() / c,
                Op::Neg => -a(),
                Op::Tanh => a().tanh(),
                Op::Atanh => a().atanh(),
                Op::Sinh => a().sinh(),
                Op::Cosh => a().cosh(),
                Op::Acosh => a().acosh(),
                Op::Asinh => a().asinh(),
                Op::Exp => a().exp(),
                Op::Ln => a().ln(),
                Op::Sqrt => a().sqrt(),
                Op::Sigmoid => sigmoid_f64(a()),
                Op::Softplus => softplus_f64(a()),
                Op::Abs => a().abs(),
            };
            vals.push(v);
        }
        vals
    }

    /// Recorded node values, in order.
    pub fn values(&self) -> Vec<f64> {
        self.nodes.borrow().iter().map(|n| n.value).collect()
    }
}

impl<'t> Var<'t> {
    pub fn index(self) -> usize {
        self.idx as usize
    }

    #[inline]
    fn unary(self, op: Op, value: f64) -> Self {
        self.tape.push(op, self.idx, 0, value)
    }

    #[inline]
    fn binary(self, rhs: Self, op: Op, value: f64) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape), "vars from different tapes");
        self.tape.push(op, self.idx, rhs.idx, value)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Add, self.val + rhs.val)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Sub, self.val - rhs.val)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Mul, self.val * rhs.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Div, self.val / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(Op::Neg, -self.val)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(Op::AddConst(rhs), self.val + rhs)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(Op::SubConst(rhs), self.val - rhs)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(Op::MulConst(rhs), self.val * rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(Op::DivConst(rhs), self.val / rhs)
    }
}

impl<'t> Real for Var<'t> {
    #[inline]
    fn value(self) -> f64 {
        self.val
    }
    fn constant(self, v: f64) -> Self {
        self.tape.constant(v)
    }
    fn tanh(self) -> Self {
        self.unary(Op::Tanh, self.val.tanh())
    }
    fn atanh(self) -> Self {
        self.unary(Op::Atanh, self.val.atanh())
    }
    fn sinh(self) -> Self {
        self.unary(Op::Sinh, self.val.sinh())
    }
    fn cosh(self) -> Self {
        self.unary(Op::Cosh, self.val.cosh())
    }
    fn acosh(self) -> Self {
        self.unary(Op::Acosh, self.val.acosh())
    }
    fn asinh(self) -> Self {
        self.unary(Op::Asinh, self.val.asinh())
    }
    fn exp(self) -> Self {
        self.unary(Op::Exp, self.val.exp())
    }
    fn ln(self) -> Self {
        self.unary(Op::Ln, self.val.ln())
    }
    fn sqrt(self) -> Self {
        self.unary(Op::Sqrt, self.val.sqrt())
    }
    fn sigmoid(self) -> Self {
        self.unary(Op::Sigmoid, sigmoid_f64(self.val))
    }
    fn softplus(self) -> Self {
        self.unary(Op::Softplus, softplus_f64(self.val))
    }
    fn abs(self) -> Self {
        self.unary(Op::Abs, self.val.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = x * x;
        assert_eq!(tape.grad(y).unwrap(), vec![6.0]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        let tape = Tape::new();
        let x = tape.var(0.7);
        let y = tape.var(-1.3);
        let s = x * y;
        let f = s.tanh() + s * 2.0 - (x / y).exp();
        let g = tape.grad(f).unwrap();
        let sv = 0.7 * -1.3;
        let t = 1.0 - f64::tanh(sv).powi(2);
        let e = (0.7f64 / -1.3).exp();
        let dx = t * -1.3 + 2.0 * -1.3 - e / -1.3;
        let dy = t * 0.7 + 2.0 * 0.7 + e * 0.7 / (1.3 * 1.3);
        assert!((g[0] - dx).abs() < 1e-14);
        assert!((g[1] - dy).abs() < 1e-14);
    }

    #[test]
    fn replay_is_bit_exact() {
        let tape = Tape::new();
        let x = tape.var(0.3);
        let y = tape.var(1.7);
        let z = ((x * y).sinh() + y.acosh() - x.atanh() / 3.0).softplus().sqrt();
        let _ = (z.sigmoid() * z.abs()).ln() + y.asinh().cosh();
        assert_eq!(tape.replay(), tape.values());
    }

    #[test]
    fn foreign_output_rejected() {
        let a = Tape::new();
        let b = Tape::new();
        let _ = a.var(1.0);
        let y = b.var(2.0);
        assert!(matches!(a.grad(y), Err(GradError::ForeignOutput)));
    }

    #[test]
    fn constants_carry_no_gradient() {
        let tape = Tape::new();
        let x = tape.var(2.0);
        let c = x.constant(5.0);
        let f = x * c + c;
        assert_eq!(tape.grad(f).unwrap(), vec![5.0]);
    }

    #[test]
    fn clear_reuses_tape() {
        let mut tape = Tape::new();
        {
            let x = tape.var(1.0);
            let _ = x * x;
        }
        tape.clear();
        assert!(tape.is_empty());
        let x = tape.var(4.0);
        let y = x * x * x;
        assert_eq!(tape.grad(y).unwrap(), vec![48.0]);
    }
}

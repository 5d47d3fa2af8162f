use thiserror::Error;

use super::term::{InstanceRef, Prim, Term};
use crate::registry::Registry;
use crate::resolver::unfold_projection;

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("normalization fuel exhausted after {0} steps")]
    FuelExhausted(usize),
}

/// Leftmost-outermost normalizer with beta, delta (projection unfolding)
/// and iota (`natrec` on literals and `succ`) steps.
pub struct Normalizer<'r> {
    reg: &'r Registry,
    fuel: usize,
    steps: usize,
}

impl<'r> Normalizer<'r> {
    pub fn new(reg: &'r Registry, fuel: usize) -> Self {
        Normalizer { reg, fuel, steps: 0 }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn tick(&mut self) -> Result<(), KernelError> {
        if self.steps >= self.fuel {
            return Err(KernelError::FuelExhausted(self.fuel));
        }
        self.steps += 1;
        Ok(())
    }

    /// Weak head normal form.
    pub fn whnf(&mut self, mut t: Term) -> Result<Term, KernelError> {
        loop {
            t = match t {
                Term::App(f, a) => {
                    let f = self.whnf(*f)?;
                    match f {
                        Term::Lam(_, body) => {
                            self.tick()?;
                            Term::instantiate(&body, &a)
                        }
                        Term::Prim(p) => match self.prim_step(p, *a)? {
                            Ok(reduced) => reduced,
                            Err(arg) => return Ok(Term::app(Term::Prim(p), arg)),
                        },
                        other => return Ok(Term::App(Box::new(other), a)),
                    }
                }
                Term::Proj(InstanceRef::Derived(ref d), ref field) => match unfold_projection(self.reg, d, field) {
                    Some(body) => {
                        self.tick()?;
                        body
                    }
                    None => return Ok(t),
                },
                Term::NatRec(z, s, n) => {
                    let n = self.whnf(*n)?;
                    match n {
                        Term::NatLit(0) => {
                            self.tick()?;
                            *z
                        }
                        Term::NatLit(k) => {
                            self.tick()?;
                            let pred = Term::NatLit(k - 1);
                            let rec = Term::NatRec(z, s.clone(), Box::new(pred.clone()));
                            Term::apps(*s, [pred, rec])
                        }
                        Term::App(ref head, ref m) if matches!(**head, Term::Prim(Prim::Succ)) => {
                            self.tick()?;
                            let m = (**m).clone();
                            let rec = Term::NatRec(z, s.clone(), Box::new(m.clone()));
                            Term::apps(*s, [m, rec])
                        }
                        stuck => return Ok(Term::NatRec(z, s, Box::new(stuck))),
                    }
                }
                other => return Ok(other),
            };
        }
    }

    /// Unary primitive reductions: `succ n`, `unop (mkop x)`, `mkop (unop x)`.
    /// Returns `Err(arg)` when the application is stuck.
    fn prim_step(&mut self, p: Prim, arg: Term) -> Result<Result<Term, Term>, KernelError> {
        let arg = match p {
            Prim::Succ | Prim::MkOp | Prim::Unop => self.whnf(arg)?,
            _ => return Ok(Err(arg)),
        };
        let reduced = match (p, &arg) {
            (Prim::Succ, Term::NatLit(k)) => Some(Term::NatLit(k + 1)),
            (Prim::Unop, Term::App(h, x)) if matches!(**h, Term::Prim(Prim::MkOp)) => Some((**x).clone()),
            (Prim::MkOp, Term::App(h, x)) if matches!(**h, Term::Prim(Prim::Unop)) => Some((**x).clone()),
            _ => None,
        };
        match reduced {
            Some(r) => {
                self.tick()?;
                Ok(Ok(r))
            }
            None => Ok(Err(arg)),
        }
    }

    /// Full normal form.
    pub fn normalize(&mut self, t: Term) -> Result<Term, KernelError> {
        let t = self.whnf(t)?;
        Ok(match t {
            Term::Lam(b, body) => Term::Lam(b, Box::new(self.normalize(*body)?)),
            Term::App(f, a) => {
                let f = self.normalize(*f)?;
                let a = self.normalize(*a)?;
                Term::app(f, a)
            }
            Term::NatRec(z, s, n) => {
                let z = self.normalize(*z)?;
                let s = self.normalize(*s)?;
                let n = self.normalize(*n)?;
                Term::natrec(z, s, n)
            }
            other => other,
        })
    }
}

pub fn normalize(t: &Term, reg: &Registry, fuel: usize) -> Result<Term, KernelError> {
    Normalizer::new(reg, fuel).normalize(t.clone())
}

/// Definitional equality: alpha-equivalence of normal forms, with eta
/// collapse `fun x => f x ≡ f` applied during comparison.
pub fn defeq(a: &Term, b: &Term, reg: &Registry, fuel: usize) -> Result<bool, KernelError> {
    let na = normalize(a, reg, fuel)?;
    let nb = normalize(b, reg, fuel)?;
    Ok(convertible(&na, &nb))
}

/// `fun x => f x` with `x` not free in `f` collapses to `f`.
pub fn eta_collapse(t: &Term) -> Option<Term> {
    if let Term::Lam(_, body) = t {
        if let Term::App(f, a) = body.as_ref() {
            if matches!(**a, Term::Var(0)) && !f.has_var(0) {
                return Some(f.shift(-1, 0));
            }
        }
    }
    None
}

/// Structural comparison of normal forms modulo eta.
pub fn convertible(a: &Term, b: &Term) -> bool {
    if a == b {
        return true;
    }
    match (a, b) {
        (Term::Lam(_, x), Term::Lam(_, y)) => convertible(x, y),
        (Term::Lam(..), _) => eta_collapse(a).is_some_and(|c| convertible(&c, b)),
        (_, Term::Lam(..)) => eta_collapse(b).is_some_and(|c| convertible(a, &c)),
        (Term::App(f, x), Term::App(g, y)) => convertible(f, g) && convertible(x, y),
        (Term::NatRec(z1, s1, n1), Term::NatRec(z2, s2, n2)) => {
            convertible(z1, z2) && convertible(s1, s2) && convertible(n1, n2)
        }
        _ => false,
    }
}

//! The evaluation interface shared by parsed observables and derived
//! potentials (coboundaries, pullbacks under a conjugacy).

use crate::dynamics::MapSpec;

/// A real-valued function on the phase space.
pub trait Potential: Sync {
    fn value(&self, x: f64) -> f64;

    /// An upper bound for `sup φ`. Used by branch-and-bound searches, so it
    /// must never be below the true supremum.
    fn sup_bound(&self) -> f64;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }

    fn sup_bound(&self) -> f64 {
        (**self).sup_bound()
    }
}

/// `ψ∘T − ψ` for a transfer function `ψ`.
pub struct Coboundary<'a, P: Potential> {
    pub transfer: P,
    pub map: &'a MapSpec,
    /// Upper bound for `sup |ψ|`.
    pub transfer_sup_abs: f64,
}

impl<P: Potential> Potential for Coboundary<'_, P> {
    fn value(&self, x: f64) -> f64 {
        self.transfer.value(self.map.eval_f64(x)) - self.transfer.value(x)
    }

    fn sup_bound(&self) -> f64 {
        2.0 * self.transfer_sup_abs
    }
}

/// A potential given by a closure together with its declared bound.
pub struct FnPotential<F> {
    pub f: F,
    pub sup: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Potential for FnPotential<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn sup_bound(&self) -> f64 {
        self.sup
    }
}

/// `φ + shift`; handy for affine-covariance checks.
pub struct Shifted<P> {
    pub inner: P,
    pub scale: f64,
    pub shift: f64,
}

impl<P: Potential> Potential for Shifted<P> {
    fn value(&self, x: f64) -> f64 {
        self.scale * self.inner.value(x) + self.shift
    }

    fn sup_bound(&self) -> f64 {
        // only valid for positive scales
        debug_assert!(self.scale >= 0.0);
        self.scale * self.inner.sup_bound() + self.shift
    }
}

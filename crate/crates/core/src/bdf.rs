//! IMEX-BDF coefficient tables and the history buffer they act on.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::{to_f64, Real};
use crate::spectral::{Field, SpectralOps, Spectrum};

pub const MAX_ORDER: usize = 5;

// (numerator, denominator) pairs, newest history entry first.
const ALPHA: [(i64, i64); MAX_ORDER] = [(1, 1), (3, 2), (11, 6), (25, 12), (137, 60)];
const A: [&[(i64, i64)]; MAX_ORDER] = [
    &[(1, 1)],
    &[(2, 1), (-1, 2)],
    &[(3, 1), (-3, 2), (1, 3)],
    &[(4, 1), (-3, 1), (4, 3), (-1, 4)],
    &[(5, 1), (-5, 1), (10, 3), (-5, 4), (1, 5)],
];
const B: [&[i64]; MAX_ORDER] = [
    &[1],
    &[2, -1],
    &[3, -3, 1],
    &[4, -6, 4, -1],
    &[5, -10, 10, -5, 1],
];

fn ratio<T: Real>((p, q): (i64, i64)) -> T {
    T::from_i64(p).expect("small integer") / T::from_i64(q).expect("small integer")
}

/// `α_k φ^{n+1} - A_k(φ^n)` approximates `δt φ'(t^{n+1})`, and
/// `B_k(φ^n)` extrapolates `φ(t^{n+1})`, both to order `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfTable<T: Real> {
    pub k: usize,
    pub alpha: T,
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> BdfTable<T> {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&k) {
            return Err(Error::InvalidOrder(k));
        }
        Ok(Self {
            k,
            alpha: ratio(ALPHA[k - 1]),
            a: A[k - 1].iter().map(|&r| ratio(r)).collect(),
            b: B[k - 1].iter().map(|&n| ratio((n, 1))).collect(),
        })
    }
}

/// Convenience alias for [`BdfTable::new`].
pub fn bdf_table<T: Real>(k: usize) -> Result<BdfTable<T>> {
    BdfTable::new(k)
}

#[derive(Debug, Clone)]
pub struct Entry<T: Real> {
    pub t: T,
    pub field: Field<T>,
    /// Coefficients the field was synthesized from, when the producer had
    /// them. Combining these instead of re-transforming `field` keeps the
    /// transform rounding out of the implicit part of the next step.
    pub spectrum: Option<Spectrum<T>>,
    pub aux: T,
}

/// The most recent accepted states, newest first, with a scalar alongside
/// each field (the auxiliary variable of the scheme using it).
#[derive(Debug, Clone)]
pub struct History<T: Real> {
    capacity: usize,
    entries: VecDeque<Entry<T>>,
}

impl<T: Real> History<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Adds the newest state, evicting the oldest once at capacity.
    pub fn push(&mut self, t: T, field: Field<T>, aux: T) -> Result<()> {
        self.push_entry(Entry {
            t,
            field,
            spectrum: None,
            aux,
        })
    }

    /// Like [`History::push`], keeping the spectrum `field` came from.
    pub fn push_with_spectrum(&mut self, t: T, field: Field<T>, spectrum: Spectrum<T>, aux: T) -> Result<()> {
        if !Arc::ptr_eq(spectrum.grid(), field.grid()) && **spectrum.grid() != **field.grid() {
            return Err(Error::GridMismatch);
        }
        self.push_entry(Entry {
            t,
            field,
            spectrum: Some(spectrum),
            aux,
        })
    }

    fn push_entry(&mut self, entry: Entry<T>) -> Result<()> {
        let Entry { t, ref field, .. } = entry;
        if let Some(last) = self.entries.front() {
            if !(t > last.t) {
                return Err(Error::NonMonotoneHistory {
                    last: to_f64(last.t),
                    pushed: to_f64(t),
                });
            }
            field.check_grid(&last.field)?;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_back();
        }
        self.entries.push_front(entry);
        Ok(())
    }

    /// Entry `i` steps back from the newest.
    pub fn get(&self, i: usize) -> Option<&Entry<T>> {
        self.entries.get(i)
    }

    pub fn newest(&self) -> Option<&Entry<T>> {
        self.entries.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry<T>> {
        self.entries.iter()
    }

    fn require(&self, k: usize) -> Result<()> {
        if self.entries.len() < k {
            Err(Error::InsufficientHistory {
                needed: k,
                available: self.entries.len(),
            })
        } else {
            Ok(())
        }
    }

    fn weighted(&self, w: &[T]) -> Result<Field<T>> {
        self.require(w.len())?;
        let fields: Vec<&Field<T>> = self.entries.iter().take(w.len()).map(|e| &e.field).collect();
        Field::combination(w, &fields)
    }

    fn weighted_aux(&self, w: &[T]) -> Result<T> {
        self.require(w.len())?;
        Ok(self
            .entries
            .iter()
            .zip(w)
            .fold(T::zero(), |acc, (e, &c)| acc + c * e.aux))
    }

    /// `A_k(φ^n)`
    pub fn combine_a(&self, table: &BdfTable<T>) -> Result<Field<T>> {
        self.weighted(&table.a)
    }

    /// Fourier coefficients of `A_k(φ^n)`, from stored spectra where
    /// available.
    pub fn combine_a_spectrum(&self, table: &BdfTable<T>, ops: &SpectralOps<T>) -> Result<Spectrum<T>> {
        self.require(table.a.len())?;
        let mut acc = Spectrum::zeros(ops.grid().clone());
        for (e, &w) in self.entries.iter().zip(&table.a) {
            match &e.spectrum {
                Some(s) => acc.axpy(w, s)?,
                None => acc.axpy(w, &ops.forward(&e.field)?)?,
            }
        }
        Ok(acc)
    }

    /// `B_k(φ^n)`
    pub fn extrapolate_b(&self, table: &BdfTable<T>) -> Result<Field<T>> {
        self.weighted(&table.b)
    }

    /// `A_k` applied to the scalar stream.
    pub fn combine_aux_a(&self, table: &BdfTable<T>) -> Result<T> {
        self.weighted_aux(&table.a)
    }

    /// `B_k` applied to the scalar stream.
    pub fn extrapolate_aux_b(&self, table: &BdfTable<T>) -> Result<T> {
        self.weighted_aux(&table.b)
    }
}

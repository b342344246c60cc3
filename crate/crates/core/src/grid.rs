//! Rectangular (κ, h) grids. Points are indexed row-major with κ as the slow
//! axis: `index = i_kappa * n_h + i_h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KAPPA_RANGE: (f64, f64) = (0.0, 1.0);
pub const H_RANGE: (f64, f64) = (0.0, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub kappa: Vec<f64>,
    pub h: Vec<f64>,
}

impl Grid {
    /// Ascending axes; both non-empty.
    pub fn new(kappa: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if kappa.is_empty() || h.is_empty() {
            return Err(Error::validation("grid axes must be non-empty"));
        }
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if !ascending(&kappa) || !ascending(&h) {
            return Err(Error::validation("grid axes must be finite and strictly ascending"));
        }
        Ok(Self { kappa, h })
    }

    /// `n_kappa x n_h` evenly spaced nodes over `[0,1] x [0,2]`, endpoints
    /// included. A single node sits at the lower corner.
    pub fn uniform(n_kappa: usize, n_h: usize) -> Result<Self> {
        Self::new(linspace(KAPPA_RANGE, n_kappa), linspace(H_RANGE, n_h))
    }

    pub fn n_kappa(&self) -> usize {
        self.kappa.len()
    }

    pub fn n_h(&self) -> usize {
        self.h.len()
    }

    pub fn len(&self) -> usize {
        self.kappa.len() * self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i_kappa: usize, i_h: usize) -> usize {
        i_kappa * self.h.len() + i_h
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.h.len(), index % self.h.len())
    }

    /// `(κ, h)` of a flat index.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (i, j) = self.coords(index);
        (self.kappa[i], self.h[j])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Flat index of the node nearest to `(κ, h)` (ties to the lower node).
    pub fn nearest(&self, kappa: f64, h: f64) -> usize {
        self.index(nearest_on_axis(&self.kappa, kappa), nearest_on_axis(&self.h, h))
    }

    pub fn nearest_h_row(&self, h: f64) -> usize {
        nearest_on_axis(&self.h, h)
    }

    pub fn nearest_kappa_row(&self, kappa: f64) -> usize {
        nearest_on_axis(&self.kappa, kappa)
    }

    /// Visiting order where consecutive points are 4-neighbours: κ rows in
    /// turn, h ascending on even rows and descending on odd rows.
    pub fn serpentine(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        for i in 0..self.n_kappa() {
            if i % 2 == 0 {
                order.extend((0..self.n_h()).map(|j| self.index(i, j)));
            } else {
                order.extend((0..self.n_h()).rev().map(|j| self.index(i, j)));
            }
        }
        order
    }
}

fn nearest_on_axis(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, &a) in axis.iter().enumerate() {
        if (a - x).abs() < (axis[best] - x).abs() {
            best = i;
        }
    }
    best
}

pub fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

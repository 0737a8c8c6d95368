/// Truncated Fock space of the two-dimensional E_g oscillator.
///
/// States (n_x, n_y) with n_x + n_y <= n_max, ordered by total quanta and
/// then by decreasing n_x: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_max: usize,
    states: Vec<(usize, usize)>,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Self {
        let states = (0..=n_max)
            .flat_map(|n| (0..=n).rev().map(move |nx| (nx, n - nx)))
            .collect();
        FockBasis { n_max, states }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// (n_max + 1)(n_max + 2) / 2
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        self.states[index]
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn index(&self, nx: usize, ny: usize) -> Option<usize> {
        let n = nx + ny;
        (n <= self.n_max).then(|| n * (n + 1) / 2 + ny)
    }
}

/// Matrix elements of a boson operator in a [`FockBasis`] as (row, col, value).
pub(crate) type BosonOp = Vec<(usize, usize, f64)>;

/// Which mode an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    X,
    Y,
}

fn quanta(state: (usize, usize), mode: Mode) -> usize {
    match mode {
        Mode::X => state.0,
        Mode::Y => state.1,
    }
}

fn shifted(state: (usize, usize), mode: Mode, up: bool) -> Option<(usize, usize)> {
    let (nx, ny) = state;
    match (mode, up) {
        (Mode::X, true) => Some((nx + 1, ny)),
        (Mode::Y, true) => Some((nx, ny + 1)),
        (Mode::X, false) => nx.checked_sub(1).map(|n| (n, ny)),
        (Mode::Y, false) => ny.checked_sub(1).map(|n| (nx, n)),
    }
}

/// Dimensionless coordinate (a^dagger + a) / sqrt(2).
pub(crate) fn coordinate(basis: &FockBasis, mode: Mode) -> BosonOp {
    let mut out = Vec::new();
    for (col, &s) in basis.states().iter().enumerate() {
        let n = quanta(s, mode) as f64;
        if let Some(row) = shifted(s, mode, true).and_then(|(a, b)| basis.index(a, b)) {
            out.push((row, col, ((n + 1.0) / 2.0).sqrt()));
        }
        if let Some(row) = shifted(s, mode, false).and_then(|(a, b)| basis.index(a, b)) {
            out.push((row, col, (n / 2.0).sqrt()));
        }
    }
    out
}

/// Exact matrix elements of the squared coordinate, (a^2 + a^dagger^2 + 2n + 1) / 2,
/// restricted to the basis.
pub(crate) fn coordinate_squared(basis: &FockBasis, mode: Mode) -> BosonOp {
    let mut out = Vec::new();
    for (col, &s) in basis.states().iter().enumerate() {
        let n = quanta(s, mode) as f64;
        out.push((col, col, n + 0.5));
        let up2 = shifted(s, mode, true).and_then(|t| shifted(t, mode, true));
        if let Some(row) = up2.and_then(|(a, b)| basis.index(a, b)) {
            out.push((row, col, ((n + 1.0) * (n + 2.0)).sqrt() / 2.0));
        }
        let down2 = shifted(s, mode, false).and_then(|t| shifted(t, mode, false));
        if let Some(row) = down2.and_then(|(a, b)| basis.index(a, b)) {
            out.push((row, col, (n * (n - 1.0)).sqrt() / 2.0));
        }
    }
    out
}

/// Exact matrix elements of X Y restricted to the basis.
pub(crate) fn coordinate_product(basis: &FockBasis) -> BosonOp {
    let mut out = Vec::new();
    for (col, &s) in basis.states().iter().enumerate() {
        for x_up in [true, false] {
            for y_up in [true, false] {
                let Some(mid) = shifted(s, Mode::X, x_up) else { continue };
                let Some(t) = shifted(mid, Mode::Y, y_up) else { continue };
                let Some(row) = basis.index(t.0, t.1) else { continue };
                let fx = if x_up { (s.0 as f64 + 1.0) / 2.0 } else { s.0 as f64 / 2.0 };
                let fy = if y_up { (s.1 as f64 + 1.0) / 2.0 } else { s.1 as f64 / 2.0 };
                out.push((row, col, (fx * fy).sqrt()));
            }
        }
    }
    out
}

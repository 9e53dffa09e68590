//! In-place kernels on a flat amplitude buffer indexed by basis state.
//!
//! The density-matrix backend stores `rho[r][c]` at `(r << n) | c` and reuses
//! these kernels: a left action on qubit `q` is a kernel on qubit `q + n`, a
//! right action by `U^dagger` is the conjugated kernel on qubit `q`.

use num_complex::Complex64;

pub type C64 = Complex64;
pub(crate) type Matrix2 = [[C64; 2]; 2];

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
fn for_each_pair(len: usize, q: usize, mut f: impl FnMut(usize, usize)) {
    let stride = 1usize << q;
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            f(i, i + stride);
        }
        base += stride << 1;
    }
}

pub(crate) fn apply_matrix(buf: &mut [C64], q: usize, m: &Matrix2) {
    for_each_pair(buf.len(), q, |i0, i1| {
        let a = buf[i0];
        let b = buf[i1];
        buf[i0] = m[0][0] * a + m[0][1] * b;
        buf[i1] = m[1][0] * a + m[1][1] * b;
    });
}

pub(crate) fn conj_matrix(m: &Matrix2) -> Matrix2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

/// Multiply each amplitude by `exp(-i phi z_q)`.
pub(crate) fn apply_phase_z(buf: &mut [C64], q: usize, phi: f64) {
    let plus = C64::from_polar(1.0, -phi);
    let minus = C64::from_polar(1.0, phi);
    for_each_pair(buf.len(), q, |i0, i1| {
        buf[i0] *= plus;
        buf[i1] *= minus;
    });
}

/// Multiply each amplitude by `exp(-i phi z_a z_b)`.
pub(crate) fn apply_phase_zz(buf: &mut [C64], a: usize, b: usize, phi: f64) {
    let aligned = C64::from_polar(1.0, -phi);
    let anti = C64::from_polar(1.0, phi);
    for (i, amp) in buf.iter_mut().enumerate() {
        let parity = ((i >> a) ^ (i >> b)) & 1;
        *amp *= if parity == 0 { aligned } else { anti };
    }
}

pub(crate) fn apply_cnot(buf: &mut [C64], control: usize, target: usize) {
    let cbit = 1usize << control;
    for_each_pair(buf.len(), target, |i0, i1| {
        if i0 & cbit != 0 {
            buf.swap(i0, i1);
        }
    });
}

pub(crate) fn apply_x(buf: &mut [C64], q: usize) {
    for_each_pair(buf.len(), q, |i0, i1| buf.swap(i0, i1));
}

pub(crate) fn apply_z(buf: &mut [C64], q: usize) {
    for_each_pair(buf.len(), q, |_, i1| buf[i1] = -buf[i1]);
}

/// Y = [[0, -i], [i, 0]].
pub(crate) fn apply_y(buf: &mut [C64], q: usize) {
    for_each_pair(buf.len(), q, |i0, i1| {
        let a = buf[i0];
        let b = buf[i1];
        buf[i0] = C64::new(b.im, -b.re);
        buf[i1] = C64::new(-a.im, a.re);
    });
}

/// `exp(-i theta/2 X)`.
pub(crate) fn rx_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

/// `exp(-i theta/2 Y)`.
pub(crate) fn ry_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

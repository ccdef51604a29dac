//! Small-scale and composite channel synthesis.
//!
//! Matrix orientation: `h_ai` is N_I×N_A, `h_iu` is N_I×K, `h_au` is N_A×K,
//! `h_ad` is N_D×N_A and `h_du` is N_D×K, with per-user channels as columns.

use std::io::{Read, Write};

use num_complex::Complex;
use rand::{Rng, SeedableRng};

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::{complex_normal, SimRng};
use crate::scalar::{unit_phasor, Real};
use crate::scenario::{pathloss_gain, GeometryLayout, LinkKind, ScenarioConfig, SteeringSpec};

/// Response of a uniform linear array to a plane wave with the given direction
/// cosine along the array axis. Unit norm; entry `k` is
/// `exp(−j·2π·spacing·k·cosine)/√n`.
pub fn ula_response<T: Real>(n: usize, direction_cosine: f64, spacing_wavelengths: f64) -> Vec<Complex<T>> {
    let amp = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let ph = -std::f64::consts::TAU * spacing_wavelengths * k as f64 * direction_cosine;
            unit_phasor::<T>(ph) * T::of(amp)
        })
        .collect()
}

/// Half-wavelength ULA steering vector toward `angle` off broadside.
pub fn steering_vector_ula<T: Real>(n: usize, angle: f64) -> Vec<Complex<T>> {
    ula_response(n, angle.sin(), 0.5)
}

/// Planar-array response as the Kronecker product of a row ULA (x axis) and a
/// column ULA (z axis); element index is `row·cols + col`.
pub fn upa_response<T: Real>(dims: (usize, usize), steer: SteeringSpec, spacing_wavelengths: f64) -> Vec<Complex<T>> {
    let (ux, uz) = steer.direction_cosines();
    let a_rows: Vec<Complex<T>> = ula_response(dims.0, ux, spacing_wavelengths);
    let a_cols: Vec<Complex<T>> = ula_response(dims.1, uz, spacing_wavelengths);
    let mut out = Vec::with_capacity(dims.0 * dims.1);
    for r in &a_rows {
        for c in &a_cols {
            out.push(r * c);
        }
    }
    out
}

/// Half-wavelength planar steering vector for azimuth/elevation angles.
pub fn steering_vector_upa<T: Real>(dims: (usize, usize), angles: (f64, f64)) -> Vec<Complex<T>> {
    upa_response(
        dims,
        SteeringSpec {
            azimuth: angles.0,
            elevation: angles.1,
        },
        0.5,
    )
}

/// Near-field LOS part of the AP–DIRS channel: entry `(r, n)` is
/// `exp(−j·2π/λ·(D_n^r − D_n))`.
pub fn near_field_los_ad<T: Real>(geometry: &GeometryLayout) -> CMatrix<T> {
    let k = std::f64::consts::TAU / geometry.wavelength_m;
    CMatrix::from_fn(geometry.dirs_elements.len(), geometry.n_antennas(), |r, n| {
        unit_phasor(-k * geometry.near_field_path_difference(r, n))
    })
}

/// Far-field LOS part of the AP–IRS channel, `√(N_I·N_A)·α_I·α_Aᴴ` (rank one).
pub fn far_field_los_ai<T: Real>(geometry: &GeometryLayout) -> CMatrix<T> {
    let n_i = geometry.irs_elements.len();
    let n_a = geometry.n_antennas();
    let a_i: Vec<Complex<T>> = upa_response(geometry.irs_shape, geometry.irs_to_ap(), geometry.spacing_wavelengths);
    let a_a: Vec<Complex<T>> = ula_response(n_a, geometry.ap_to_irs_sine(), geometry.spacing_wavelengths);
    CMatrix::outer(&a_i, &a_a).scale(T::of(((n_i * n_a) as f64).sqrt()))
}

/// Far-field LOS part of the IRS–user channels, columns `√N_I·α_I(user k)`.
pub fn far_field_los_iu<T: Real>(geometry: &GeometryLayout) -> CMatrix<T> {
    let n_i = geometry.irs_elements.len();
    let cols: Vec<Vec<Complex<T>>> = (0..geometry.n_users())
        .map(|k| {
            let a: Vec<Complex<T>> = upa_response(geometry.irs_shape, geometry.irs_to_user(k), geometry.spacing_wavelengths);
            let s = T::of((n_i as f64).sqrt());
            a.into_iter().map(|z| z * s).collect()
        })
        .collect();
    CMatrix::from_columns(n_i, &cols).expect("columns built with n_irs rows")
}

/// i.i.d. CN(0, 1) matrix.
pub fn draw_rayleigh<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

fn rician_weights(rician_factor: f64) -> Result<(f64, f64)> {
    if !(rician_factor >= 0.0) {
        return Err(invalid(format!("Rician factor must be non-negative, got {rician_factor}")));
    }
    if rician_factor.is_infinite() {
        return Ok((1.0, 0.0));
    }
    Ok((
        (rician_factor / (1.0 + rician_factor)).sqrt(),
        (1.0 / (1.0 + rician_factor)).sqrt(),
    ))
}

/// `√L·(√(ε/(1+ε))·LOS + √(1/(1+ε))·NLOS)`.
pub fn assemble_rician<T: Real>(
    los: &CMatrix<T>,
    nlos: &CMatrix<T>,
    rician_factor: f64,
    pathloss: f64,
) -> Result<CMatrix<T>> {
    if los.shape() != nlos.shape() {
        return Err(Error::DimensionMismatch {
            context: "assemble_rician",
            expected: format!("{:?}", los.shape()),
            actual: format!("{:?}", nlos.shape()),
        });
    }
    if !(pathloss > 0.0) {
        return Err(invalid(format!("pathloss gain must be positive, got {pathloss}")));
    }
    let (wl, wn) = rician_weights(rician_factor)?;
    let s = pathloss.sqrt();
    let (a, b) = (T::of(s * wl), T::of(s * wn));
    let data = los
        .as_slice()
        .iter()
        .zip(nlos.as_slice())
        .map(|(l, n)| l * a + n * b)
        .collect();
    CMatrix::from_row_major(los.rows(), los.cols(), data)
}

/// Linear large-scale gains of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub l_ai: f64,
    pub l_ad: f64,
    pub l_iu: Vec<f64>,
    pub l_au: Vec<f64>,
    pub l_du: Vec<f64>,
}

impl LargeScale {
    pub fn from_geometry(geometry: &GeometryLayout) -> Result<Self> {
        let per_user = |ds: &[f64], kind| ds.iter().map(|&d| pathloss_gain(kind, d)).collect::<Result<Vec<_>>>();
        Ok(Self {
            l_ai: pathloss_gain(LinkKind::LosLike, geometry.d_ai)?,
            l_ad: pathloss_gain(LinkKind::LosLike, geometry.d_ad)?,
            l_iu: per_user(&geometry.d_iu, LinkKind::LosLike)?,
            l_au: per_user(&geometry.d_au, LinkKind::NlosLike)?,
            l_du: per_user(&geometry.d_du, LinkKind::NlosLike)?,
        })
    }
}

/// One coherence-interval realization of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T> {
    pub h_ai: CMatrix<T>,
    pub h_iu: CMatrix<T>,
    pub h_au: CMatrix<T>,
    pub h_ad: CMatrix<T>,
    pub h_du: CMatrix<T>,
    pub large_scale: LargeScale,
}

impl<T: Real> ChannelSet<T> {
    pub fn n_antennas(&self) -> usize {
        self.h_au.rows()
    }

    pub fn n_users(&self) -> usize {
        self.h_au.cols()
    }

    pub fn n_irs(&self) -> usize {
        self.h_ai.rows()
    }

    pub fn n_dirs(&self) -> usize {
        self.h_ad.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (n_a, k) = self.h_au.shape();
        let n_i = self.h_ai.rows();
        let n_d = self.h_ad.rows();
        let checks: [(&'static str, (usize, usize), (usize, usize)); 4] = [
            ("ChannelSet h_ai", self.h_ai.shape(), (n_i, n_a)),
            ("ChannelSet h_iu", self.h_iu.shape(), (n_i, k)),
            ("ChannelSet h_ad", self.h_ad.shape(), (n_d, n_a)),
            ("ChannelSet h_du", self.h_du.shape(), (n_d, k)),
        ];
        for (context, got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: format!("{want:?}"),
                    actual: format!("{got:?}"),
                });
            }
        }
        let ls = &self.large_scale;
        if ls.l_iu.len() != k || ls.l_au.len() != k || ls.l_du.len() != k {
            return Err(Error::DimensionMismatch {
                context: "ChannelSet large-scale gains",
                expected: format!("{k} per-user values"),
                actual: format!("{}/{}/{}", ls.l_iu.len(), ls.l_au.len(), ls.l_du.len()),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.h_ai, &self.h_iu, &self.h_au, &self.h_ad, &self.h_du]
            .iter()
            .all(|m| m.is_finite())
    }
}

/// Draws every channel of one coherence interval.
///
/// The generator hands out one sub-seed per link in a fixed order, so changing
/// the size of one surface leaves the other links' draws untouched.
pub fn draw_channel_set<T: Real, R: Rng + ?Sized>(
    config: &ScenarioConfig,
    geometry: &GeometryLayout,
    rng: &mut R,
) -> Result<ChannelSet<T>> {
    let n_a = geometry.n_antennas();
    let k = geometry.n_users();
    let n_i = geometry.irs_elements.len();
    let n_d = geometry.dirs_elements.len();
    let large_scale = LargeScale::from_geometry(geometry)?;
    let seeds: [u64; 5] = rng.random();
    let sub = |i: usize| SimRng::seed_from_u64(seeds[i]);

    let h_ad = assemble_rician(
        &near_field_los_ad(geometry),
        &draw_rayleigh(n_d, n_a, &mut sub(0)),
        config.rician_ad,
        large_scale.l_ad,
    )?;
    let h_ai = assemble_rician(
        &far_field_los_ai(geometry),
        &draw_rayleigh(n_i, n_a, &mut sub(1)),
        config.rician_ai,
        large_scale.l_ai,
    )?;
    let los_iu = far_field_los_iu::<T>(geometry);
    let nlos_iu = draw_rayleigh::<T, _>(n_i, k, &mut sub(2));
    let mut h_iu = CMatrix::zeros(n_i, k);
    let (wl, wn) = rician_weights(config.rician_iu)?;
    for u in 0..k {
        let s = large_scale.l_iu[u].sqrt();
        for r in 0..n_i {
            h_iu[(r, u)] = los_iu[(r, u)] * T::of(s * wl) + nlos_iu[(r, u)] * T::of(s * wn);
        }
    }
    let h_au = scale_columns(draw_rayleigh(n_a, k, &mut sub(3)), &large_scale.l_au);
    let h_du = scale_columns(draw_rayleigh(n_d, k, &mut sub(4)), &large_scale.l_du);

    let set = ChannelSet {
        h_ai,
        h_iu,
        h_au,
        h_ad,
        h_du,
        large_scale,
    };
    debug_assert!(set.validate().is_ok());
    Ok(set)
}

/// Multiplies column `c` by `√gains[c]`.
pub fn scale_columns<T: Real>(mut m: CMatrix<T>, gains: &[f64]) -> CMatrix<T> {
    let cols = m.cols();
    assert_eq!(gains.len(), cols);
    let s: Vec<T> = gains.iter().map(|g| T::of(g.sqrt())).collect();
    for (i, z) in m.as_mut_slice().iter_mut().enumerate() {
        *z = *z * s[i % cols];
    }
    m
}

const DUMP_MAGIC: &[u8; 8] = b"IRSCHAN1";
const DUMP_VERSION: u32 = 1;
const MATRIX_TAGS: [&[u8; 4]; 5] = [b"HAI\0", b"HIU\0", b"HAU\0", b"HAD\0", b"HDU\0"];
const LSC_TAG: &[u8; 4] = b"LSC\0";

/// Writes a channel set in the binary dump format described in the README.
pub fn write_channel_dump<T: Real, W: Write>(set: &ChannelSet<T>, mut w: W) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(MATRIX_TAGS.len() as u32).to_le_bytes())?;
    let mats = [&set.h_ai, &set.h_iu, &set.h_au, &set.h_ad, &set.h_du];
    for (tag, m) in MATRIX_TAGS.iter().zip(mats) {
        w.write_all(*tag)?;
        w.write_all(&(m.rows() as u64).to_le_bytes())?;
        w.write_all(&(m.cols() as u64).to_le_bytes())?;
        for z in m.as_slice() {
            w.write_all(&z.re.as_f64().to_le_bytes())?;
            w.write_all(&z.im.as_f64().to_le_bytes())?;
        }
    }
    let ls = &set.large_scale;
    w.write_all(LSC_TAG)?;
    w.write_all(&(ls.l_iu.len() as u64).to_le_bytes())?;
    w.write_all(&ls.l_ai.to_le_bytes())?;
    w.write_all(&ls.l_ad.to_le_bytes())?;
    for v in [&ls.l_iu, &ls.l_au, &ls.l_du] {
        for x in v.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Dump(format!("truncated input: {e}")))?;
    Ok(buf)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

/// Reads a dump written by [`write_channel_dump`].
pub fn read_channel_dump<T: Real, R: Read>(mut r: R) -> Result<ChannelSet<T>> {
    if &read_array::<8, _>(&mut r)? != DUMP_MAGIC {
        return Err(Error::Dump("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != DUMP_VERSION {
        return Err(Error::Dump(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if count != MATRIX_TAGS.len() {
        return Err(Error::Dump(format!("expected {} matrices, found {count}", MATRIX_TAGS.len())));
    }
    let mut mats = Vec::with_capacity(count);
    for expected in MATRIX_TAGS {
        let tag = read_array::<4, _>(&mut r)?;
        if &tag != expected {
            return Err(Error::Dump(format!("unexpected section tag {:?}", String::from_utf8_lossy(&tag))));
        }
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let len = rows
            .checked_mul(cols)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| Error::Dump(format!("implausible matrix size {rows}x{cols}")))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            data.push(Complex::new(T::of(re), T::of(im)));
        }
        mats.push(CMatrix::from_row_major(rows, cols, data)?);
    }
    if &read_array::<4, _>(&mut r)? != LSC_TAG {
        return Err(Error::Dump("missing large-scale section".into()));
    }
    let k = read_u64(&mut r)? as usize;
    if k > 1 << 24 {
        return Err(Error::Dump(format!("implausible user count {k}")));
    }
    let l_ai = read_f64(&mut r)?;
    let l_ad = read_f64(&mut r)?;
    let mut per_user = || (0..k).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>();
    let l_iu = per_user()?;
    let l_au = per_user()?;
    let l_du = per_user()?;
    let mut it = mats.into_iter();
    let mut next = || it.next().expect("five matrices read");
    let set = ChannelSet {
        h_ai: next(),
        h_iu: next(),
        h_au: next(),
        h_ad: next(),
        h_du: next(),
        large_scale: LargeScale {
            l_ai,
            l_ad,
            l_iu,
            l_au,
            l_du,
        },
    };
    set.validate().map_err(|e| Error::Dump(e.to_string()))?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::scenario::{build_geometry, layout_with_users};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn ula_examples() {
        let a: Vec<Complex<f64>> = steering_vector_ula(5, 0.0);
        for z in &a {
            assert!(close(*z, a[0], 1e-15));
        }
        assert!((crate::scalar::norm(&a) - 1.0).abs() < 1e-15);
        let b: Vec<Complex<f64>> = steering_vector_ula(2, FRAC_PI_2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(b[0], Complex::new(s, 0.0), 1e-15));
        assert!(close(b[1], Complex::new(-s, 0.0), 1e-15));
    }

    #[test]
    fn upa_is_kronecker_of_ulas() {
        let steer = SteeringSpec {
            azimuth: 0.4,
            elevation: 1.1,
        };
        let a: Vec<Complex<f64>> = upa_response((3, 2), steer, 0.5);
        let (ux, uz) = steer.direction_cosines();
        // direct evaluation of the 2-D phase ramp
        for r in 0..3 {
            for c in 0..2 {
                let ph = -PI * (r as f64 * ux + c as f64 * uz);
                let want = Complex::from_polar(1.0 / 6f64.sqrt(), ph);
                assert!(close(a[r * 2 + c], want, 1e-14));
            }
        }
        assert!((crate::scalar::norm(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn near_field_entries() {
        let cfg = ScenarioConfig::paper();
        let g = layout_with_users(&cfg, vec![cfg.user_region_center]).unwrap();
        let m: CMatrix<f64> = near_field_los_ad(&g);
        for z in m.as_slice() {
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
        // independent recomputation of entry (0, 0) from raw coordinates
        let a0 = g.ap_elements[0];
        let e0 = g.dirs_elements[0];
        let dn_r = ((a0[0] - e0[0]).powi(2) + (a0[1] - e0[1]).powi(2) + (a0[2] - e0[2]).powi(2)).sqrt();
        let dn = ((a0[0] - 2.0).powi(2) + a0[1].powi(2) + (a0[2] - 2.0).powi(2)).sqrt();
        let want = Complex::from_polar(1.0, -2.0 * PI / 0.06 * (dn_r - dn));
        assert!(close(m[(0, 0)], want, 1e-9));
    }

    #[test]
    fn near_field_trivial_phases() {
        // one antenna, one element at the DIRS center, and one half a wavelength further
        let mut cfg = ScenarioConfig::desk();
        cfg.n_antennas = 1;
        cfg.n_dirs = 1;
        let mut g = layout_with_users(&cfg, vec![cfg.user_region_center]).unwrap();
        let m: CMatrix<f64> = near_field_los_ad(&g);
        assert!(close(m[(0, 0)], Complex::new(1.0, 0.0), 1e-15));
        g.dirs_element_distances[0] += g.wavelength_m / 2.0;
        let m: CMatrix<f64> = near_field_los_ad(&g);
        assert!(close(m[(0, 0)], Complex::new(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn rayleigh_moments() {
        let mut rng = stream_rng(3, &[]);
        let m: CMatrix<f64> = draw_rayleigh(1000, 1000, &mut rng);
        let n = 1e6;
        let mean: Complex<f64> = m.as_slice().iter().sum::<Complex<f64>>() / n;
        let var = m.frobenius_norm_sqr() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for z in m.as_slice() {
            sxy += z.re * z.im;
            sxx += z.re * z.re;
            syy += z.im * z.im;
        }
        let rho = sxy / (sxx * syy).sqrt();
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        assert!(mean.norm() < 0.005, "mean {mean}");
        assert!(rho.abs() < 0.01, "rho {rho}");
    }

    #[test]
    fn rician_limits_and_power() {
        let mut rng = stream_rng(4, &[]);
        let los = CMatrix::from_fn(1000, 1000, |r, c| Complex::from_polar(1.0, 0.001 * (r * 7 + c) as f64));
        let nlos: CMatrix<f64> = draw_rayleigh(1000, 1000, &mut rng);
        let pure = assemble_rician(&los, &nlos, 0.0, 4.0).unwrap();
        assert!(pure.sub(&nlos.scale(2.0)).unwrap().frobenius_norm() < 1e-9);
        let lim = assemble_rician(&los, &nlos, 1e12, 4.0).unwrap();
        for (a, b) in lim.as_slice().iter().zip(los.as_slice()) {
            assert!((a - b * 2.0).norm() <= 1e-5 * 2.0);
        }
        for eps in [0.0, 1.0, 3.0, 10.0, 1e12] {
            let m = assemble_rician(&los, &nlos, eps, 1.0).unwrap();
            let p = m.frobenius_norm_sqr() / 1e6;
            assert!((p - 1.0).abs() < 0.01, "eps {eps}: power {p}");
        }
        assert!(assemble_rician(&los, &CMatrix::zeros(2, 2), 1.0, 1.0).is_err());
        assert!(assemble_rician(&los, &nlos, -1.0, 1.0).is_err());
    }

    #[test]
    fn los_ai_is_rank_one() {
        let cfg = ScenarioConfig::desk();
        let g = build_geometry(&cfg, &mut stream_rng(1, &[])).unwrap();
        let m: CMatrix<f64> = far_field_los_ai(&g);
        // every 2×2 minor vanishes for a rank-one matrix
        for (r1, r2) in [(0, 1), (3, 17), (5, 31)] {
            for (c1, c2) in [(0, 1), (2, 7)] {
                let det = m[(r1, c1)] * m[(r2, c2)] - m[(r1, c2)] * m[(r2, c1)];
                assert!(det.norm() < 1e-12);
            }
        }
        for z in m.as_slice() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_set_is_deterministic_and_finite() {
        let cfg = ScenarioConfig::desk();
        let g = build_geometry(&cfg, &mut stream_rng(1, &[])).unwrap();
        let a: ChannelSet<f64> = draw_channel_set(&cfg, &g, &mut stream_rng(2, &[])).unwrap();
        let b: ChannelSet<f64> = draw_channel_set(&cfg, &g, &mut stream_rng(2, &[])).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        a.validate().unwrap();
        assert_eq!(a.h_ad.shape(), (256, 8));
        assert_eq!(a.h_iu.shape(), (32, 4));
    }

    #[test]
    fn irs_size_does_not_disturb_other_links() {
        let mut cfg = ScenarioConfig::desk();
        let g = layout_with_users(&cfg, vec![cfg.user_region_center; 4]).unwrap();
        let a: ChannelSet<f64> = draw_channel_set(&cfg, &g, &mut stream_rng(2, &[])).unwrap();
        cfg.n_irs = 64;
        let g = layout_with_users(&cfg, vec![cfg.user_region_center; 4]).unwrap();
        let b: ChannelSet<f64> = draw_channel_set(&cfg, &g, &mut stream_rng(2, &[])).unwrap();
        assert_eq!(a.h_au, b.h_au);
        assert_eq!(a.h_ad, b.h_ad);
        assert_eq!(a.h_du, b.h_du);
    }

    #[test]
    fn dump_round_trip_and_corruption() {
        let cfg = ScenarioConfig::desk();
        let g = build_geometry(&cfg, &mut stream_rng(1, &[])).unwrap();
        let set: ChannelSet<f64> = draw_channel_set(&cfg, &g, &mut stream_rng(2, &[])).unwrap();
        let mut buf = Vec::new();
        write_channel_dump(&set, &mut buf).unwrap();
        let n_entries: usize = 32 * 8 + 32 * 4 + 8 * 4 + 256 * 8 + 256 * 4;
        assert_eq!(buf.len(), 16 + 5 * 20 + 16 * n_entries + 4 + 8 + 16 + 3 * 4 * 8);
        let back: ChannelSet<f64> = read_channel_dump(buf.as_slice()).unwrap();
        assert_eq!(back, set);

        assert!(matches!(read_channel_dump::<f64, _>(&buf[..100]), Err(Error::Dump(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_channel_dump::<f64, _>(bad.as_slice()), Err(Error::Dump(_))));
    }
}

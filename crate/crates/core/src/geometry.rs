//! Numeric kernels shared by every analysis: vectors, center of mass,
//! optimal superposition, RMSD and orthorhombic minimum image.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("length mismatch: {left} vs {right} points")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty point set")]
    Empty,
    #[error("non-positive mass {mass} at index {index}")]
    NonPositiveMass { index: usize, mass: f64 },
    #[error("non-positive weight {weight} at index {index}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("unsupported cell: {0}")]
    UnsupportedCell(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Cartesian 3-vector in Å.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Rotation matrix of a unit quaternion (w, x, y, z).
    pub fn from_quaternion(q: [f64; 4]) -> Mat3 {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        Mat3([
            [
                w * w + x * x - y * y - z * z,
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                w * w - x * x + y * y - z * z,
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                w * w - x * x - y * y + z * z,
            ],
        ])
    }
}

/// Optimal rigid-body fit: `rotation · mobile + translation ≈ reference`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superposition {
    pub rotation: Mat3,
    pub translation: Vec3,
    pub rmsd_after: f64,
}

impl Superposition {
    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    pub fn apply_all(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.iter().map(|&p| self.apply(p)).collect()
    }
}

/// Mass-weighted centroid.
pub fn center_of_mass(coords: &[Vec3], masses: &[f64]) -> Result<Vec3> {
    if coords.len() != masses.len() {
        return Err(GeometryError::LengthMismatch {
            left: coords.len(),
            right: masses.len(),
        });
    }
    if coords.is_empty() {
        return Err(GeometryError::Empty);
    }
    let mut total = 0.0;
    let mut acc = Vec3::ZERO;
    for (i, (&p, &m)) in coords.iter().zip(masses).enumerate() {
        if !(m > 0.0) {
            return Err(GeometryError::NonPositiveMass { index: i, mass: m });
        }
        acc += p * m;
        total += m;
    }
    Ok(acc / total)
}

fn check_weights(weights: Option<&[f64]>, n: usize) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != n {
            return Err(GeometryError::LengthMismatch {
                left: n,
                right: w.len(),
            });
        }
        if let Some((index, &weight)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(GeometryError::NonPositiveWeight { index, weight });
        }
    }
    Ok(())
}

fn weighted_centroid(points: &[Vec3], weights: Option<&[f64]>) -> Vec3 {
    match weights {
        Some(w) => {
            let total: f64 = w.iter().sum();
            points
                .iter()
                .zip(w)
                .fold(Vec3::ZERO, |acc, (&p, &wi)| acc + p * wi)
                / total
        }
        None => points.iter().fold(Vec3::ZERO, |acc, &p| acc + p) / points.len() as f64,
    }
}

/// Root-mean-square deviation without any fitting.
pub fn rmsd_raw(a: &[Vec3], b: &[Vec3], weights: Option<&[f64]>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GeometryError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(GeometryError::Empty);
    }
    check_weights(weights, a.len())?;
    let msd = match weights {
        Some(w) => {
            let total: f64 = w.iter().sum();
            a.iter()
                .zip(b)
                .zip(w)
                .map(|((&p, &q), &wi)| wi * (p - q).norm2())
                .sum::<f64>()
                / total
        }
        None => a.iter().zip(b).map(|(&p, &q)| (p - q).norm2()).sum::<f64>() / a.len() as f64,
    };
    Ok(msd.sqrt())
}

/// Weighted least-squares superposition of `mobile` onto `reference`.
///
/// The rotation is the eigenvector of the largest eigenvalue of the 4×4
/// quaternion form of the cross-covariance matrix, so it is always proper
/// (det = +1), including for mirror-image inputs. Coincident point sets
/// give the identity rotation.
pub fn kabsch(mobile: &[Vec3], reference: &[Vec3], weights: Option<&[f64]>) -> Result<Superposition> {
    if mobile.len() != reference.len() {
        return Err(GeometryError::LengthMismatch {
            left: mobile.len(),
            right: reference.len(),
        });
    }
    if mobile.is_empty() {
        return Err(GeometryError::Empty);
    }
    check_weights(weights, mobile.len())?;

    let cm = weighted_centroid(mobile, weights);
    let cr = weighted_centroid(reference, weights);

    // cross-covariance s[a][b] = Σ w m_a r_b over centered coordinates
    let mut s = [[0.0f64; 3]; 3];
    let mut spread_m = 0.0;
    let mut spread_r = 0.0;
    let mut scale = 0.0;
    for (i, (&m, &r)) in mobile.iter().zip(reference).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let mc = m - cm;
        let rc = r - cr;
        spread_m += w * mc.norm2();
        spread_r += w * rc.norm2();
        scale += w * (m.norm2() + r.norm2());
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] += w * mc[a] * rc[b];
            }
        }
    }

    let degenerate_cutoff = 1e-24 * scale.max(f64::MIN_POSITIVE);
    let rotation = if spread_m <= degenerate_cutoff || spread_r <= degenerate_cutoff {
        Mat3::IDENTITY
    } else {
        let [[sxx, sxy, sxz], [syx, syy, syz], [szx, szy, szz]] = s;
        let n = [
            [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
            [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
            [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
            [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
        ];
        let (values, vectors) = jacobi_eigen4(n);
        let best = (0..4)
            .max_by(|&i, &j| values[i].total_cmp(&values[j]))
            .unwrap_or(0);
        let q = [vectors[0][best], vectors[1][best], vectors[2][best], vectors[3][best]];
        Mat3::from_quaternion(q)
    };

    let translation = cr - rotation.apply(cm);
    let fit = Superposition {
        rotation,
        translation,
        rmsd_after: 0.0,
    };
    let moved: Vec<Vec3> = fit.apply_all(mobile);
    let rmsd_after = rmsd_raw(&moved, reference, weights)?;
    Ok(Superposition { rmsd_after, ..fit })
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 4×4 matrix.
/// Returns eigenvalues and the eigenvector matrix (columns are eigenvectors).
fn jacobi_eigen4(mut a: [[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..64 {
        let off: f64 = (0..4)
            .flat_map(|p| ((p + 1)..4).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        let diag: f64 = (0..4).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-36 * diag || off == 0.0 {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}

/// Unit cell: edge lengths in Å, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCell {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl UnitCell {
    pub fn orthorhombic(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            c,
            alpha: 90.0,
            beta: 90.0,
            gamma: 90.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let len_ok = [self.a, self.b, self.c].iter().all(|&l| l > 0.0 && l.is_finite());
        let ang_ok = [self.alpha, self.beta, self.gamma]
            .iter()
            .all(|&g| g > 0.0 && g < 180.0);
        len_ok && ang_ok
    }

    /// Edge lengths of an orthorhombic cell; errors on any angle off 90° by more than 1e-6.
    pub fn orthorhombic_lengths(&self) -> Result<Vec3> {
        let skewed = [self.alpha, self.beta, self.gamma]
            .iter()
            .any(|&g| (g - 90.0).abs() > 1e-6);
        if skewed {
            return Err(GeometryError::UnsupportedCell(format!(
                "angles ({}, {}, {}) are not orthorhombic",
                self.alpha, self.beta, self.gamma
            )));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.c > 0.0) {
            return Err(GeometryError::UnsupportedCell(format!(
                "non-positive edge lengths ({}, {}, {})",
                self.a, self.b, self.c
            )));
        }
        Ok(Vec3::new(self.a, self.b, self.c))
    }
}

#[inline]
fn wrap_component(d: f64, l: f64) -> f64 {
    let mut r = d - l * (d / l + 0.5).floor();
    let half = 0.5 * l;
    if r >= half {
        r -= l;
    } else if r < -half {
        r += l;
    }
    r
}

/// Wraps each component of `d` into `[-L/2, L/2)` for edge lengths `box_lengths`.
#[inline]
pub fn min_image(d: Vec3, box_lengths: Vec3) -> Vec3 {
    Vec3::new(
        wrap_component(d.x, box_lengths.x),
        wrap_component(d.y, box_lengths.y),
        wrap_component(d.z, box_lengths.z),
    )
}

/// Minimum-image displacement for an orthorhombic cell.
pub fn min_image_displacement(d: Vec3, cell: &UnitCell) -> Result<Vec3> {
    let lengths = cell.orthorhombic_lengths()?;
    Ok(min_image(d, lengths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot_z(deg: f64) -> Mat3 {
        let (s, c) = deg.to_radians().sin_cos();
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    #[test]
    fn com_examples() {
        let one = center_of_mass(&[Vec3::new(1.0, 2.0, 3.0)], &[5.0]).unwrap();
        assert_eq!(one, Vec3::new(1.0, 2.0, 3.0));
        let pair = center_of_mass(&[Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0)], &[1.0, 1.0]).unwrap();
        assert_eq!(pair, Vec3::new(1.0, 0.0, 0.0));
        // Σ m x / M = (1·0 + 3·4) / 4
        let lopsided = center_of_mass(&[Vec3::ZERO, Vec3::new(4.0, 0.0, 0.0)], &[1.0, 3.0]).unwrap();
        assert_eq!(lopsided.x, 3.0);
    }

    #[test]
    fn com_rejects_bad_mass() {
        let err = center_of_mass(&[Vec3::ZERO, Vec3::ZERO], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, GeometryError::NonPositiveMass { index: 1, .. }));
        assert!(center_of_mass(&[Vec3::ZERO], &[-1.0]).is_err());
    }

    #[test]
    fn kabsch_identity() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.3, 0.1, 3.0),
        ];
        let fit = kabsch(&pts, &pts, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((fit.rotation.0[i][j] - expect).abs() < 1e-12);
            }
        }
        assert!(fit.translation.norm() < 1e-12);
        assert!(fit.rmsd_after < 1e-12);
    }

    #[test]
    fn kabsch_recovers_z_rotation() {
        let mobile = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(1.0, 1.0, 0.5),
        ];
        let r = rot_z(90.0);
        let reference: Vec<Vec3> = mobile.iter().map(|&p| r.apply(p)).collect();
        let fit = kabsch(&mobile, &reference, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((fit.rotation.0[i][j] - r.0[i][j]).abs() < 1e-9);
            }
        }
        assert!(fit.rmsd_after < 1e-9);
        assert!((fit.rotation.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kabsch_mirror_stays_proper() {
        let mobile = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(1.0, 1.0, 0.5),
        ];
        let mirrored: Vec<Vec3> = mobile.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let fit = kabsch(&mobile, &mirrored, None).unwrap();
        assert!((fit.rotation.determinant() - 1.0).abs() < 1e-9);
        assert!(fit.rmsd_after > 0.1);
    }

    #[test]
    fn kabsch_coincident_points() {
        let p = Vec3::new(0.1, 0.2, 0.3);
        let mobile = vec![p; 3];
        let reference = vec![Vec3::new(1.0, 1.0, 1.0); 3];
        let fit = kabsch(&mobile, &reference, None).unwrap();
        assert_eq!(fit.rotation, Mat3::IDENTITY);
        assert!(fit.rmsd_after < 1e-12);
    }

    #[test]
    fn kabsch_length_mismatch() {
        assert!(matches!(
            kabsch(&[Vec3::ZERO], &[Vec3::ZERO, Vec3::ZERO], None),
            Err(GeometryError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rmsd_examples() {
        let a = vec![Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)];
        assert_eq!(rmsd_raw(&a, &a, None).unwrap(), 0.0);
        let b: Vec<Vec3> = a.iter().map(|&p| p + Vec3::new(3.0, 4.0, 0.0)).collect();
        assert!((rmsd_raw(&a, &b, None).unwrap() - 5.0).abs() < 1e-12);
        assert!(rmsd_raw(&a, &b[..1], None).is_err());
    }

    #[test]
    fn min_image_examples() {
        let cell = UnitCell::orthorhombic(10.0, 10.0, 10.0);
        let d = min_image_displacement(Vec3::new(0.4, 0.0, 0.0), &cell).unwrap();
        assert!((d.x - 0.4).abs() < 1e-12);
        let d = min_image_displacement(Vec3::new(9.6, 0.0, 0.0), &cell).unwrap();
        assert!((d.x + 0.4).abs() < 1e-12);
        let d = min_image_displacement(Vec3::new(5.0, -5.0, 0.0), &cell).unwrap();
        assert_eq!((d.x, d.y), (-5.0, -5.0));
    }

    #[test]
    fn min_image_rejects_triclinic() {
        let mut cell = UnitCell::orthorhombic(10.0, 10.0, 10.0);
        cell.gamma = 60.0;
        assert!(matches!(
            min_image_displacement(Vec3::ZERO, &cell),
            Err(GeometryError::UnsupportedCell(_))
        ));
    }
}

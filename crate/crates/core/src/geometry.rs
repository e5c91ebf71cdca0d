//! Hexahedral cell geometry.
//!
//! Corner numbering is `a + 2b + 4c` for the corner at logical offset
//! `(a, b, c)`. Every face is listed counter-clockwise when seen from outside
//! the cell, so its right-hand normal points outward.
//!
//! The volume of a cell is the surface integral over its six quadrilateral
//! faces, where each quad contributes the mean of its two diagonal
//! triangulations. This equals the mean of the two complementary
//! five-tetrahedron decompositions ([`tet5_volume`] with either parity). The
//! same quad term is used for swept face volumes, so that the target volume
//! of a cell equals its deformed volume minus the swept volumes of its faces.
//!
//! Inert axes use unit thickness: the corner coordinate along such an axis is
//! the corner bit itself.

use crate::error::{Result, SaleError};
use crate::grid::{BlockLayout, Centering, Field};

pub type Vec3 = [f64; 3];

/// Outward-oriented faces: x-low, x-high, y-low, y-high, z-low, z-high.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

#[inline(always)]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline(always)]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline(always)]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline(always)]
fn triple(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    dot(a, cross(b, c))
}

/// Volume contribution of an oriented quad relative to the origin, averaged
/// over both diagonal triangulations.
#[inline(always)]
pub fn quad_volume_term(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (triple(a, b, c) + triple(a, c, d) + triple(a, b, d) + triple(b, c, d)) / 12.0
}

/// Gradient of [`quad_volume_term`] with respect to its first vertex.
/// Rotating the arguments gives the gradient for the other three.
#[inline(always)]
fn quad_volume_grad(b: Vec3, c: Vec3, d: Vec3) -> Vec3 {
    let bc = cross(b, c);
    let cd = cross(c, d);
    let bd = cross(b, d);
    [
        (bc[0] + cd[0] + bd[0]) / 12.0,
        (bc[1] + cd[1] + bd[1]) / 12.0,
        (bc[2] + cd[2] + bd[2]) / 12.0,
    ]
}

#[inline(always)]
fn shifted(corners: &[Vec3; 8]) -> [Vec3; 8] {
    let r = corners[0];
    let mut s = [[0.0; 3]; 8];
    for n in 0..8 {
        s[n] = sub(corners[n], r);
    }
    s
}

/// Signed volume of a hexahedron (positive for a right-handed cell).
#[inline]
pub fn hex_volume(corners: &[Vec3; 8]) -> f64 {
    let p = shifted(corners);
    let mut v = 0.0;
    for f in &HEX_FACES {
        v += quad_volume_term(p[f[0]], p[f[1]], p[f[2]], p[f[3]]);
    }
    v
}

/// Gradient of [`hex_volume`] with respect to each corner position.
#[inline]
pub fn hex_volume_gradient(corners: &[Vec3; 8]) -> [Vec3; 8] {
    let p = shifted(corners);
    let mut g = [[0.0; 3]; 8];
    for f in &HEX_FACES {
        for r in 0..4 {
            let gr = quad_volume_grad(p[f[(r + 1) % 4]], p[f[(r + 2) % 4]], p[f[(r + 3) % 4]]);
            let v = f[r];
            g[v][0] += gr[0];
            g[v][1] += gr[1];
            g[v][2] += gr[2];
        }
    }
    g
}

#[inline]
fn tet_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    triple(sub(b, a), sub(c, a), sub(d, a)) / 6.0
}

/// Five-tetrahedron decompositions. The `even` variant uses the central
/// tetrahedron on corners with even bit parity (0, 3, 5, 6); the odd variant
/// uses corners 1, 2, 4, 7. Vertex orders are positive for a right-handed cell.
const TET5_EVEN: [[usize; 4]; 5] =
    [[0, 3, 6, 5], [1, 0, 5, 3], [2, 0, 3, 6], [4, 0, 6, 5], [7, 3, 5, 6]];
const TET5_ODD: [[usize; 4]; 5] =
    [[1, 2, 4, 7], [0, 1, 2, 4], [3, 1, 7, 2], [5, 1, 4, 7], [6, 2, 7, 4]];

/// Volume from one five-tetrahedron decomposition of the hexahedron.
pub fn tet5_volume(corners: &[Vec3; 8], even: bool) -> f64 {
    let tets = if even { &TET5_EVEN } else { &TET5_ODD };
    tets.iter()
        .map(|t| tet_volume(corners[t[0]], corners[t[1]], corners[t[2]], corners[t[3]]))
        .sum()
}

/// Volume swept by one face moving from `target` to `deformed`, with both
/// quads listed in the cell's outward orientation. Positive when the deformed
/// face lies outside the target face, i.e. when volume leaves the cell during
/// the remap back to the target mesh.
pub fn swept_face_volume(deformed: &[Vec3; 4], target: &[Vec3; 4]) -> f64 {
    let r = target[0];
    let d: [Vec3; 4] = std::array::from_fn(|n| sub(deformed[n], r));
    let t: [Vec3; 4] = std::array::from_fn(|n| sub(target[n], r));
    let mut v = quad_volume_term(d[0], d[1], d[2], d[3]) - quad_volume_term(t[0], t[1], t[2], t[3]);
    for e in 0..4 {
        let p = e;
        let q = (e + 1) % 4;
        v += quad_volume_term(d[q], d[p], t[p], t[q]);
    }
    v
}

/// Corner positions of local cell `(i, j, k)` read from a vertex position
/// field. Inert axes are synthesized with unit thickness.
#[inline]
pub fn hex_corners(x: &Field, active: [bool; 3], i: isize, j: isize, k: isize) -> [Vec3; 8] {
    let mut out = [[0.0; 3]; 8];
    for (n, corner) in out.iter_mut().enumerate() {
        let bits = [n & 1, (n >> 1) & 1, (n >> 2) & 1];
        let vi = i + if active[0] { bits[0] as isize } else { 0 };
        let vj = j + if active[1] { bits[1] as isize } else { 0 };
        let vk = k + if active[2] { bits[2] as isize } else { 0 };
        let mut p = x.vec3_at(x.offset(vi, vj, vk));
        for d in 0..3 {
            if !active[d] {
                p[d] = bits[d] as f64;
            }
        }
        *corner = p;
    }
    out
}

/// Vertex storage offsets of the eight corners of local cell `(i, j, k)`.
/// Corners along inert axes share an entry.
#[inline]
pub fn corner_offsets(x: &Field, active: [bool; 3], i: isize, j: isize, k: isize) -> [usize; 8] {
    std::array::from_fn(|n| {
        let vi = i + if active[0] { (n & 1) as isize } else { 0 };
        let vj = j + if active[1] { ((n >> 1) & 1) as isize } else { 0 };
        let vk = k + if active[2] { ((n >> 2) & 1) as isize } else { 0 };
        x.offset(vi, vj, vk)
    })
}

/// Volume of every interior cell of `rank`'s block.
pub fn cell_geometry(layout: &BlockLayout, rank: usize, positions: &Field) -> Result<Field> {
    if positions.centering() != Centering::Vertex || positions.components() != 3 {
        return Err(SaleError::Contract("cell_geometry needs a 3-component vertex field".into()));
    }
    let block = layout.block(rank)?;
    let active = layout.grid().active_axes();
    let mut vol = Field::new(block.len, active, layout.ghost_width(), Centering::Cell, 1)?;
    let n = vol.interior_extent();
    for k in 0..n[2] as isize {
        for j in 0..n[1] as isize {
            for i in 0..n[0] as isize {
                let v = hex_volume(&hex_corners(positions, active, i, j, k));
                if !(v > 0.0) {
                    return Err(SaleError::TangledMesh {
                        cell: [
                            block.start[0] + i as usize,
                            block.start[1] + j as usize,
                            block.start[2] + k as usize,
                        ],
                        volume: v,
                    });
                }
                vol.set(0, i, j, k, v);
            }
        }
    }
    Ok(vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{allocate_field, decompose_domain, GlobalGrid};

    fn unit_cube() -> [Vec3; 8] {
        std::array::from_fn(|n| [(n & 1) as f64, ((n >> 1) & 1) as f64, ((n >> 2) & 1) as f64])
    }

    #[test]
    fn unit_cube_volume_and_gradient() {
        let c = unit_cube();
        assert!((hex_volume(&c) - 1.0).abs() < 1e-15);
        assert!((tet5_volume(&c, true) - 1.0).abs() < 1e-15);
        assert!((tet5_volume(&c, false) - 1.0).abs() < 1e-15);
        let g = hex_volume_gradient(&c);
        for (n, gn) in g.iter().enumerate() {
            for d in 0..3 {
                let sign = if (n >> d) & 1 == 1 { 1.0 } else { -1.0 };
                assert!((gn[d] - sign * 0.25).abs() < 1e-15, "corner {n} axis {d}: {}", gn[d]);
            }
        }
    }

    #[test]
    fn every_tetrahedron_is_positive_on_the_unit_cube() {
        let c = unit_cube();
        for t in TET5_EVEN.iter().chain(TET5_ODD.iter()) {
            assert!(tet_volume(c[t[0]], c[t[1]], c[t[2]], c[t[3]]) > 0.0, "{t:?}");
        }
    }

    #[test]
    fn hex_volume_is_mean_of_both_decompositions() {
        let mut c = unit_cube();
        c[7] = [1.2, 0.9, 1.1];
        c[2] = [-0.1, 1.05, 0.02];
        let mean = 0.5 * (tet5_volume(&c, true) + tet5_volume(&c, false));
        assert!((hex_volume(&c) - mean).abs() < 1e-14);
    }

    /// Volume of the convex hull of a point set, by brute force: every
    /// supporting plane through three points, then a pyramid from the
    /// centroid over each face polygon.
    fn convex_hull_volume(pts: &[Vec3]) -> f64 {
        let n = pts.len();
        let centroid = {
            let mut c = [0.0; 3];
            for p in pts {
                for d in 0..3 {
                    c[d] += p[d] / n as f64;
                }
            }
            c
        };
        let mut planes: Vec<(Vec3, f64)> = Vec::new();
        let mut vol = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let mut nrm = cross(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
                    let len = dot(nrm, nrm).sqrt();
                    if len < 1e-12 {
                        continue;
                    }
                    nrm = [nrm[0] / len, nrm[1] / len, nrm[2] / len];
                    let mut off = dot(nrm, pts[a]);
                    if dot(nrm, centroid) > off {
                        nrm = [-nrm[0], -nrm[1], -nrm[2]];
                        off = -off;
                    }
                    if pts.iter().any(|p| dot(nrm, *p) > off + 1e-12) {
                        continue;
                    }
                    if planes.iter().any(|(m, o)| (dot(*m, nrm) - 1.0).abs() < 1e-12 && (o - off).abs() < 1e-12) {
                        continue;
                    }
                    planes.push((nrm, off));
                    // face polygon: coplanar points sorted by angle about their mean
                    let on: Vec<Vec3> =
                        pts.iter().copied().filter(|p| (dot(nrm, *p) - off).abs() < 1e-12).collect();
                    let mut m = [0.0; 3];
                    for p in &on {
                        for d in 0..3 {
                            m[d] += p[d] / on.len() as f64;
                        }
                    }
                    let u = sub(on[0], m);
                    let w = cross(nrm, u);
                    let mut ring: Vec<(f64, Vec3)> = on
                        .iter()
                        .map(|p| {
                            let r = sub(*p, m);
                            (dot(r, w).atan2(dot(r, u)), *p)
                        })
                        .collect();
                    ring.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                    let mut area = 0.0;
                    for e in 0..ring.len() {
                        let p = sub(ring[e].1, m);
                        let q = sub(ring[(e + 1) % ring.len()].1, m);
                        area += 0.5 * dot(cross(p, q), nrm).abs();
                    }
                    vol += area * (off - dot(nrm, centroid)) / 3.0;
                }
            }
        }
        vol
    }

    #[test]
    fn decompositions_against_convex_hull() {
        let mut c = unit_cube();
        c[7][0] += 0.1;
        let hull = convex_hull_volume(&c);
        assert!((hull - (1.0 + 1.0 / 30.0)).abs() < 1e-12, "{hull}");
        assert!((tet5_volume(&c, false) - hull).abs() < 1e-12);
        assert!((tet5_volume(&c, true) - (1.0 + 1.0 / 60.0)).abs() < 1e-12);
        assert!((hex_volume(&c) - (1.0 + 1.0 / 40.0)).abs() < 1e-12);
        let cube = convex_hull_volume(&unit_cube());
        assert!((cube - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut c = unit_cube();
        c[5] = [1.1, -0.05, 0.93];
        c[6] = [0.02, 1.1, 1.05];
        let g = hex_volume_gradient(&c);
        let h = 1e-6;
        for n in 0..8 {
            for d in 0..3 {
                let mut cp = c;
                let mut cm = c;
                cp[n][d] += h;
                cm[n][d] -= h;
                let fd = (hex_volume(&cp) - hex_volume(&cm)) / (2.0 * h);
                assert!((fd - g[n][d]).abs() < 1e-8, "corner {n} axis {d}");
            }
        }
    }

    #[test]
    fn swept_volume_of_shifted_face() {
        // x-high face of the unit cube pushed out by 0.01
        let c = unit_cube();
        let f = HEX_FACES[1];
        let target: [Vec3; 4] = std::array::from_fn(|r| c[f[r]]);
        let deformed: [Vec3; 4] = std::array::from_fn(|r| {
            let mut p = c[f[r]];
            p[0] += 0.01;
            p
        });
        assert!((swept_face_volume(&deformed, &target) - 0.01).abs() < 1e-15);
        assert_eq!(swept_face_volume(&target, &target), 0.0);
    }

    #[test]
    fn swept_volumes_telescope_to_volume_change() {
        let target = unit_cube();
        let mut deformed = target;
        let shifts = [
            [0.03, -0.02, 0.01],
            [-0.01, 0.02, 0.0],
            [0.02, 0.01, -0.03],
            [0.0, 0.0, 0.02],
            [-0.02, 0.01, 0.01],
            [0.01, -0.01, 0.03],
            [0.02, 0.02, -0.01],
            [-0.03, 0.01, 0.02],
        ];
        for n in 0..8 {
            for d in 0..3 {
                deformed[n][d] += shifts[n][d];
            }
        }
        let mut swept = 0.0;
        for f in &HEX_FACES {
            let d: [Vec3; 4] = std::array::from_fn(|r| deformed[f[r]]);
            let t: [Vec3; 4] = std::array::from_fn(|r| target[f[r]]);
            swept += swept_face_volume(&d, &t);
        }
        let lhs = hex_volume(&target);
        let rhs = hex_volume(&deformed) - swept;
        assert!(((lhs - rhs) / lhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn uniform_mesh_volumes() {
        let grid = GlobalGrid::unit([10, 10, 10]).unwrap();
        let layout = decompose_domain(&grid, [1, 1, 1]).unwrap();
        let mut x = allocate_field(&layout, 0, Centering::Vertex, Some(3)).unwrap();
        for k in 0..=10isize {
            for j in 0..=10isize {
                for i in 0..=10isize {
                    let at = x.offset(i, j, k);
                    x.set_vec3_at(at, [i as f64 * 0.1, j as f64 * 0.1, k as f64 * 0.1]);
                }
            }
        }
        let vol = cell_geometry(&layout, 0, &x).unwrap();
        for v in vol.interior_view().values(0) {
            assert!((v - 1e-3).abs() < 1e-17);
        }
    }

    #[test]
    fn one_dimensional_cells_use_unit_thickness() {
        let grid = GlobalGrid::unit([4, 1, 1]).unwrap();
        let layout = decompose_domain(&grid, [1, 1, 1]).unwrap();
        let mut x = allocate_field(&layout, 0, Centering::Vertex, Some(3)).unwrap();
        for i in 0..=4isize {
            let at = x.offset(i, 0, 0);
            x.set_vec3_at(at, [0.25 * i as f64, 0.0, 0.0]);
        }
        let vol = cell_geometry(&layout, 0, &x).unwrap();
        assert!(vol.interior_view().values(0).all(|v| v == 0.25));
    }

    #[test]
    fn inverted_cell_is_reported() {
        let grid = GlobalGrid::unit([2, 1, 1]).unwrap();
        let layout = decompose_domain(&grid, [1, 1, 1]).unwrap();
        let mut x = allocate_field(&layout, 0, Centering::Vertex, Some(3)).unwrap();
        for (i, xi) in [0.0, 0.7, 0.6].iter().enumerate() {
            let at = x.offset(i as isize, 0, 0);
            x.set_vec3_at(at, [*xi, 0.0, 0.0]);
        }
        match cell_geometry(&layout, 0, &x) {
            Err(SaleError::TangledMesh { cell, volume }) => {
                assert_eq!(cell, [1, 0, 0]);
                assert!(volume < 0.0);
            }
            other => panic!("expected tangled mesh, got {other:?}"),
        }
    }
}

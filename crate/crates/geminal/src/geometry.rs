//! Parametric hydrogen-cluster geometries and XYZ file I/O.
//!
//! Every generator is deterministic: a family plus grid values maps to the
//! same coordinate list on every call. Coordinates are stored in angstrom
//! and converted to bohr only at the integrals boundary.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// CODATA conversion used across the crate.
pub const ANGSTROM_TO_BOHR: f64 = 1.8897259886;

/// Minimum tolerated interatomic distance (angstrom); generators and the
/// XYZ reader refuse anything closer.
pub const MIN_DISTANCE: f64 = 0.05;

/// Fixed intra-pair H–H bond of the stretched-pair ("paldus") families, in
/// bohr.
pub const PALDUS_INTRA_PAIR_BOHR: f64 = 2.0;

/// A hydrogen cluster: positions in angstrom plus the family tag and named
/// parameters that generated it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub coords: Vec<[f64; 3]>,
    pub family: String,
    pub params: Vec<(String, f64)>,
}

impl Geometry {
    pub fn new(coords: Vec<[f64; 3]>, family: &str, params: &[(&str, f64)]) -> Geometry {
        Geometry {
            coords,
            family: family.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.coords.len()
    }

    /// Neutral hydrogen cluster: one electron per atom.
    pub fn n_electrons(&self) -> usize {
        self.coords.len()
    }

    pub fn coords_bohr(&self) -> Vec<[f64; 3]> {
        self.coords
            .iter()
            .map(|c| {
                [
                    c[0] * ANGSTROM_TO_BOHR,
                    c[1] * ANGSTROM_TO_BOHR,
                    c[2] * ANGSTROM_TO_BOHR,
                ]
            })
            .collect()
    }

    /// Reject empty clusters, non-finite coordinates, and atom pairs closer
    /// than [`MIN_DISTANCE`].
    pub fn validate(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(Error::Geometry("no atoms".into()));
        }
        for c in &self.coords {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Geometry("non-finite coordinate".into()));
            }
        }
        for i in 0..self.coords.len() {
            for j in 0..i {
                let d = dist(&self.coords[i], &self.coords[j]);
                if d < MIN_DISTANCE {
                    return Err(Error::Geometry(format!(
                        "atoms {} and {} are {:.4} angstrom apart (minimum {})",
                        j, i, d, MIN_DISTANCE
                    )));
                }
            }
        }
        Ok(())
    }

    /// XYZ text: atom count, a `key=value` comment line, then `H x y z`
    /// rows with 12 decimals (round-trips well below 1e-10).
    pub fn to_xyz(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.coords.len());
        let _ = write!(out, "family={}", self.family);
        for (k, v) in &self.params {
            let _ = write!(out, " {}={}", k, v);
        }
        out.push('\n');
        for c in &self.coords {
            let _ = writeln!(out, "H {:.12} {:.12} {:.12}", c[0], c[1], c[2]);
        }
        out
    }

    /// Parse XYZ text produced by [`Geometry::to_xyz`] (or by hand). Errors
    /// carry `path:line`.
    pub fn from_xyz(text: &str, path: &str) -> Result<Geometry> {
        let err = |line: usize, msg: &str| Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines();
        let count_line = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let n: usize = count_line
            .trim()
            .parse()
            .map_err(|_| err(1, "expected atom count"))?;
        let comment = lines.next().ok_or_else(|| err(2, "missing comment line"))?;
        let mut family = String::from("unknown");
        let mut params = Vec::new();
        for tok in comment.split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                if k == "family" {
                    family = v.to_string();
                } else if let Ok(x) = v.parse::<f64>() {
                    params.push((k.to_string(), x));
                }
            }
        }
        let mut coords = Vec::with_capacity(n);
        for i in 0..n {
            let lineno = 3 + i;
            let line = lines
                .next()
                .ok_or_else(|| err(lineno, "unexpected end of file"))?;
            let mut tok = line.split_whitespace();
            let elem = tok.next().ok_or_else(|| err(lineno, "empty atom line"))?;
            if elem != "H" {
                return Err(err(lineno, "only hydrogen atoms are supported"));
            }
            let mut xyz = [0.0f64; 3];
            for x in xyz.iter_mut() {
                let t = tok.next().ok_or_else(|| err(lineno, "missing coordinate"))?;
                *x = t
                    .parse()
                    .map_err(|_| err(lineno, "malformed coordinate"))?;
            }
            if tok.next().is_some() {
                return Err(err(lineno, "trailing tokens on atom line"));
            }
            coords.push(xyz);
        }
        if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
            let _ = extra;
            return Err(err(3 + n, "more lines than the declared atom count"));
        }
        let g = Geometry {
            coords,
            family,
            params,
        };
        g.validate()?;
        Ok(g)
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Rotation matrix for extrinsic rotations about x, then y, then z
/// (angles in radians).
pub fn euler_rotation(ax: f64, ay: f64, az: f64) -> [[f64; 3]; 3] {
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (sz, cz) = az.sin_cos();
    // R = Rz * Ry * Rx
    [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]
}

impl Geometry {
    /// Rigidly moved copy: rotate about the origin, then translate.
    pub fn transformed(&self, rot: &[[f64; 3]; 3], shift: &[f64; 3]) -> Geometry {
        let coords = self
            .coords
            .iter()
            .map(|c| {
                let mut out = [0.0; 3];
                for (i, o) in out.iter_mut().enumerate() {
                    *o = rot[i][0] * c[0] + rot[i][1] * c[1] + rot[i][2] * c[2] + shift[i];
                }
                out
            })
            .collect();
        Geometry {
            coords,
            family: self.family.clone(),
            params: self.params.clone(),
        }
    }

    /// Copy with atoms reordered so new atom `i` is old atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Geometry {
        assert_eq!(perm.len(), self.coords.len());
        Geometry {
            coords: perm.iter().map(|&i| self.coords[i]).collect(),
            family: self.family.clone(),
            params: self.params.clone(),
        }
    }
}

/// An inclusive, uniformly spaced 1-D parameter grid.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, count: usize) -> GridSpec {
        GridSpec { start, stop, count }
    }

    /// Grid values with both endpoints included. `count == 1` is allowed
    /// only when `start == stop`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Grid("count must be positive".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Grid("non-finite endpoint".into()));
        }
        if self.start > self.stop {
            return Err(Error::Grid(format!(
                "start {} exceeds stop {}",
                self.start, self.stop
            )));
        }
        if self.count == 1 {
            if self.start != self.stop {
                return Err(Error::Grid(
                    "a single-point grid needs start == stop".into(),
                ));
            }
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum H4Family {
    Linear,
    Tetrahedral,
    Paldus,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum H6Family {
    HexagonTwist,
    TriangularAntiprism,
    Octahedral,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum H8Family {
    Paldus8,
    Chain,
    MobiusKantor,
    SquareAntiprism,
    OctagonTwist,
}

impl FromStr for H4Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<H4Family> {
        match s {
            "linear" => Ok(H4Family::Linear),
            "tetrahedral" => Ok(H4Family::Tetrahedral),
            "paldus" => Ok(H4Family::Paldus),
            _ => Err(Error::UnknownFamily {
                system: "h4".into(),
                family: s.into(),
            }),
        }
    }
}

impl FromStr for H6Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<H6Family> {
        match s {
            "hexagon_twist" => Ok(H6Family::HexagonTwist),
            "triangular_antiprism" => Ok(H6Family::TriangularAntiprism),
            "octahedral" => Ok(H6Family::Octahedral),
            _ => Err(Error::UnknownFamily {
                system: "h6".into(),
                family: s.into(),
            }),
        }
    }
}

impl FromStr for H8Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<H8Family> {
        match s {
            "paldus8" => Ok(H8Family::Paldus8),
            "chain" => Ok(H8Family::Chain),
            "mobius_kantor" => Ok(H8Family::MobiusKantor),
            "square_antiprism" => Ok(H8Family::SquareAntiprism),
            "octagon_twist" => Ok(H8Family::OctagonTwist),
            _ => Err(Error::UnknownFamily {
                system: "h8".into(),
                family: s.into(),
            }),
        }
    }
}

/// Evenly spaced n-atom chain along z.
pub fn chain(n_atoms: usize, spacing: f64) -> Geometry {
    let coords = (0..n_atoms)
        .map(|i| [0.0, 0.0, spacing * i as f64])
        .collect();
    Geometry::new(coords, &format!("chain{}", n_atoms), &[("r", spacing)])
}

/// Equilateral triangle of side `edge` in the z = 0 plane with the fourth
/// atom on the z axis at height `apex` (negative heights are the inverted
/// tetrahedron).
pub fn tetrahedral(edge: f64, apex: f64) -> Geometry {
    let rc = edge / 3.0f64.sqrt();
    let coords = vec![
        [rc, 0.0, 0.0],
        [-rc / 2.0, edge / 2.0, 0.0],
        [-rc / 2.0, -edge / 2.0, 0.0],
        [0.0, 0.0, apex],
    ];
    Geometry::new(coords, "tetrahedral", &[("edge", edge), ("apex", apex)])
}

/// Two parallel 2.0-bohr H–H units separated by `d` along x.
pub fn paldus(d: f64) -> Geometry {
    let bond = PALDUS_INTRA_PAIR_BOHR / ANGSTROM_TO_BOHR;
    let coords = vec![
        [0.0, 0.0, 0.0],
        [0.0, 0.0, bond],
        [d, 0.0, 0.0],
        [d, 0.0, bond],
    ];
    Geometry::new(coords, "paldus", &[("separation", d)])
}

/// Two concentric coplanar equilateral triangles of side `side`, the second
/// rotated to 30°+`twist`; `twist = 30` is the regular hexagon.
pub fn hexagon_twist(side: f64, twist: f64) -> Geometry {
    let r = side / 3.0f64.sqrt();
    let mut coords = ring(r, &[0.0, 120.0, 240.0], 0.0);
    let base = 30.0 + twist;
    coords.extend(ring(r, &[base, base + 120.0, base + 240.0], 0.0));
    Geometry::new(coords, "hexagon_twist", &[("side", side), ("twist", twist)])
}

/// Interpolation (t in [0, 1]) from an aligned triangular prism to the
/// 60°-rotated antiprism; triangle side `side` throughout.
pub fn triangular_antiprism(side: f64, t: f64) -> Geometry {
    let r = side / 3.0f64.sqrt();
    let h_prism = side;
    let h_anti = side * (2.0f64 / 3.0).sqrt();
    let h = (1.0 - t) * h_prism + t * h_anti;
    let rot = 60.0 * t;
    let mut coords = ring(r, &[0.0, 120.0, 240.0], h / 2.0);
    coords.extend(ring(r, &[rot, rot + 120.0, rot + 240.0], -h / 2.0));
    Geometry::new(
        coords,
        "triangular_antiprism",
        &[("side", side), ("t", t)],
    )
}

/// Regular octahedron of side `side` with its two axial atoms pushed toward
/// the center by the fraction `compression`.
pub fn octahedral(side: f64, compression: f64) -> Geometry {
    let e = side / 2.0f64.sqrt();
    let axial = e * (1.0 - compression);
    let coords = vec![
        [e, 0.0, 0.0],
        [-e, 0.0, 0.0],
        [0.0, e, 0.0],
        [0.0, -e, 0.0],
        [0.0, 0.0, axial],
        [0.0, 0.0, -axial],
    ];
    Geometry::new(
        coords,
        "octahedral",
        &[("side", side), ("compression", compression)],
    )
}

/// Four parallel 2.0-bohr H–H units spaced `d` apart along x.
pub fn paldus8(d: f64) -> Geometry {
    let bond = PALDUS_INTRA_PAIR_BOHR / ANGSTROM_TO_BOHR;
    let mut coords = Vec::new();
    for i in 0..4 {
        let x = d * i as f64;
        coords.push([x, 0.0, 0.0]);
        coords.push([x, 0.0, bond]);
    }
    Geometry::new(coords, "paldus8", &[("separation", d)])
}

/// A fixed 2 Å square with one outward cap per edge at distance `d` from
/// both corners of its edge (`d` at least half the side).
pub fn mobius_kantor(d: f64) -> Result<Geometry> {
    let half = H8_SQUARE_SIDE / 2.0;
    if d < half {
        return Err(Error::Grid(format!(
            "cap distance {} is shorter than half the square side {}",
            d, half
        )));
    }
    let x = (d * d - half * half).sqrt();
    let coords = vec![
        [half, half, 0.0],
        [-half, half, 0.0],
        [-half, -half, 0.0],
        [half, -half, 0.0],
        [0.0, half + x, 0.0],
        [-(half + x), 0.0, 0.0],
        [0.0, -(half + x), 0.0],
        [half + x, 0.0, 0.0],
    ];
    Ok(Geometry::new(coords, "mobius_kantor", &[("cap_distance", d)]))
}

/// Interpolation (t in [0, 1]) from an aligned square prism of 2 Å squares
/// to the 45°-rotated antiprism whose inter-plate neighbors sit one side
/// length apart.
pub fn square_antiprism(t: f64) -> Geometry {
    let side = H8_SQUARE_SIDE;
    let r = side / 2.0f64.sqrt();
    let h_prism = side;
    // antiprism plate distance: nearest inter-plate neighbors at one
    // side length once the top square is rotated 45 degrees
    let chord = 2.0 * r * (22.5f64).to_radians().sin();
    let h_anti = (side * side - chord * chord).sqrt();
    let h = (1.0 - t) * h_prism + t * h_anti;
    let rot = 45.0 * t;
    let mut coords = ring(r, &[0.0, 90.0, 180.0, 270.0], h / 2.0);
    coords.extend(ring(
        r,
        &[rot, rot + 90.0, rot + 180.0, rot + 270.0],
        -h / 2.0,
    ));
    Geometry::new(coords, "square_antiprism", &[("t", t)])
}

/// Two concentric coplanar 2 Å squares, the second at 22.5°+`twist`/2;
/// `twist = 45` is the regular octagon.
pub fn octagon_twist(twist: f64) -> Geometry {
    let side = H8_SQUARE_SIDE;
    let r = side / 2.0f64.sqrt();
    let mut coords = ring(r, &[0.0, 90.0, 180.0, 270.0], 0.0);
    let base = 22.5 + twist / 2.0;
    coords.extend(ring(
        r,
        &[base, base + 90.0, base + 180.0, base + 270.0],
        0.0,
    ));
    Geometry::new(coords, "octagon_twist", &[("twist", twist)])
}

/// Rebuild a structure from its recorded family tag and parameters (the
/// inverse of the generators above, used to re-derive integrals from
/// dataset records). Chain-like tags take the atom count from `n_atoms`.
pub fn from_family_params(
    family: &str,
    n_atoms: usize,
    params: &[(String, f64)],
) -> Result<Geometry> {
    let get = |key: &str| -> Result<f64> {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                Error::Geometry(format!("family {family} needs a `{key}` parameter"))
            })
    };
    let g = match family {
        "h2" | "linear" | "chain" => {
            let mut g = chain(n_atoms, get("r")?);
            g.family = family.to_string();
            g
        }
        f if f.starts_with("chain") => chain(n_atoms, get("r")?),
        "tetrahedral" => tetrahedral(get("edge")?, get("apex")?),
        "paldus" => paldus(get("separation")?),
        "hexagon_twist" => hexagon_twist(get("side")?, get("twist")?),
        "triangular_antiprism" => triangular_antiprism(get("side")?, get("t")?),
        "octahedral" => octahedral(get("side")?, get("compression")?),
        "paldus8" => paldus8(get("separation")?),
        "mobius_kantor" => mobius_kantor(get("cap_distance")?)?,
        "square_antiprism" => square_antiprism(get("t")?),
        "octagon_twist" => octagon_twist(get("twist")?),
        _ => {
            return Err(Error::UnknownFamily {
                system: format!("{n_atoms}-atom cluster"),
                family: family.to_string(),
            })
        }
    };
    if g.n_atoms() != n_atoms {
        return Err(Error::Geometry(format!(
            "family {family} builds {} atoms, record says {n_atoms}",
            g.n_atoms()
        )));
    }
    g.validate()?;
    Ok(g)
}

/// H2 dimer scan: one grid over the bond length.
pub fn gen_h2(grid: GridSpec) -> Result<Vec<Geometry>> {
    let mut out = Vec::new();
    for r in grid.values()? {
        let mut g = chain(2, r);
        g.family = "h2".into();
        g.validate()?;
        out.push(g);
    }
    Ok(out)
}

/// Number of apex positions swept per base edge in the tetrahedral
/// inversion family (from +h through the plane to −h, endpoints included).
pub const TETRAHEDRAL_INVERSION_STEPS: usize = 18;

/// H4 families. `grid` drives the family's primary coordinate:
/// chain spacing (linear), base edge (tetrahedral inversion, which sweeps a
/// fixed 18-point apex path per edge), or inter-pair separation (paldus:
/// two parallel 2.0-bohr H–H units).
pub fn gen_h4(family: H4Family, grid: GridSpec) -> Result<Vec<Geometry>> {
    let mut out = Vec::new();
    match family {
        H4Family::Linear => {
            for r in grid.values()? {
                let mut g = chain(4, r);
                g.family = "linear".into();
                g.validate()?;
                out.push(g);
            }
        }
        H4Family::Tetrahedral => {
            for edge in grid.values()? {
                let h = edge * (2.0f64 / 3.0).sqrt();
                for k in 0..TETRAHEDRAL_INVERSION_STEPS {
                    // apex height from +h down through the base plane to -h
                    let v = 1.0 - 2.0 * k as f64 / (TETRAHEDRAL_INVERSION_STEPS - 1) as f64;
                    let g = tetrahedral(edge, v * h);
                    g.validate()?;
                    out.push(g);
                }
            }
        }
        H4Family::Paldus => {
            for d in grid.values()? {
                let g = paldus(d);
                g.validate()?;
                out.push(g);
            }
        }
    }
    Ok(out)
}

fn ring(radius: f64, angles_deg: &[f64], z: f64) -> Vec<[f64; 3]> {
    angles_deg
        .iter()
        .map(|a| {
            let t = a.to_radians();
            [radius * t.cos(), radius * t.sin(), z]
        })
        .collect()
}

/// H6 families, each a 2-D product of `grid` (size parameter) and
/// `secondary` (shape parameter):
///
/// * `hexagon_twist` — two concentric coplanar equilateral triangles of
///   side `grid`; the second triangle sits at 30°+twist, so `twist = 30`
///   reproduces the regular hexagon while `twist = 0` is a valid
///   interleaved star.
/// * `triangular_antiprism` — linear interpolation (secondary in [0, 1])
///   from an aligned prism with plate separation equal to the triangle side
///   to the antiprism rotated 60° whose inter-plate nearest-neighbor
///   distance equals the side.
/// * `octahedral` — regular octahedron of side `grid` with the two axial
///   atoms pushed toward the center by the compression fraction.
pub fn gen_h6(family: H6Family, grid: GridSpec, secondary: GridSpec) -> Result<Vec<Geometry>> {
    let mut out = Vec::new();
    for side in grid.values()? {
        for second in secondary.values()? {
            let g = match family {
                H6Family::HexagonTwist => hexagon_twist(side, second),
                H6Family::TriangularAntiprism => triangular_antiprism(side, second),
                H6Family::Octahedral => octahedral(side, second),
            };
            g.validate()?;
            out.push(g);
        }
    }
    Ok(out)
}

/// Side length (angstrom) of the fixed squares used by the H8
/// `square_antiprism`, `octagon_twist`, and `mobius_kantor` families.
pub const H8_SQUARE_SIDE: f64 = 2.0;

/// H8 families, one grid each: inter-pair separation (`paldus8`, four
/// parallel 2.0-bohr H–H units along x), chain spacing, cap-to-corner
/// distance (`mobius_kantor`, a 2 Å square with one outward cap per edge),
/// prism→antiprism interpolation t (`square_antiprism`, 2 Å squares), or
/// twist angle in degrees (`octagon_twist`, two concentric 2 Å squares with
/// the second at 22.5°+twist/2 so `twist = 45` is the regular octagon).
pub fn gen_h8(family: H8Family, grid: GridSpec) -> Result<Vec<Geometry>> {
    let mut out = Vec::new();
    for v in grid.values()? {
        let g = match family {
            H8Family::Paldus8 => paldus8(v),
            H8Family::Chain => {
                let mut g = chain(8, v);
                g.family = "chain".into();
                g
            }
            H8Family::MobiusKantor => mobius_kantor(v)?,
            H8Family::SquareAntiprism => square_antiprism(v),
            H8Family::OctagonTwist => octagon_twist(v),
        };
        g.validate()?;
        out.push(g);
    }
    Ok(out)
}

/// H10 chain scan.
pub fn gen_h10_chain(grid: GridSpec) -> Result<Vec<Geometry>> {
    let mut out = Vec::new();
    for r in grid.values()? {
        let mut g = chain(10, r);
        g.family = "chain".into();
        g.validate()?;
        out.push(g);
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Default suites. The per-family grid counts are fixed so the suite sizes
// are stable: H2 156, H4 865, H6 1386 (61408 fine), H8 362, H10 150.
// ---------------------------------------------------------------------

pub fn h2_suite() -> Result<Vec<Geometry>> {
    gen_h2(GridSpec::new(0.2, 8.0, 156))
}

pub fn h4_suite() -> Result<Vec<Geometry>> {
    let mut out = gen_h4(H4Family::Linear, GridSpec::new(0.2, 8.0, 289))?;
    out.extend(gen_h4(H4Family::Tetrahedral, GridSpec::new(1.0, 5.0, 16))?);
    out.extend(gen_h4(H4Family::Paldus, GridSpec::new(0.5, 5.0, 288))?);
    Ok(out)
}

pub fn h6_suite() -> Result<Vec<Geometry>> {
    let mut out = gen_h6(
        H6Family::HexagonTwist,
        GridSpec::new(2.0, 6.0, 21),
        GridSpec::new(0.0, 30.0, 22),
    )?;
    out.extend(gen_h6(
        H6Family::TriangularAntiprism,
        GridSpec::new(1.0, 4.0, 21),
        GridSpec::new(0.0, 1.0, 22),
    )?);
    out.extend(gen_h6(
        H6Family::Octahedral,
        GridSpec::new(2.0, 8.0, 21),
        GridSpec::new(0.0, 0.9, 22),
    )?);
    Ok(out)
}

/// Dense H6 grid. `scale = 1` yields exactly 61,408 structures
/// (160×128 + 160×128 + 142×144); smaller scales shrink each grid axis by
/// √scale while keeping the parameter ranges.
pub fn h6_fine_suite(scale: f64) -> Result<Vec<Geometry>> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::Grid(format!("fine-grid scale {} not in (0, 1]", scale)));
    }
    let shrink = |n: usize| -> usize { ((n as f64 * scale.sqrt()).round() as usize).max(2) };
    let mut out = gen_h6(
        H6Family::HexagonTwist,
        GridSpec::new(2.0, 6.0, shrink(160)),
        GridSpec::new(0.0, 30.0, shrink(128)),
    )?;
    out.extend(gen_h6(
        H6Family::TriangularAntiprism,
        GridSpec::new(1.0, 4.0, shrink(160)),
        GridSpec::new(0.0, 1.0, shrink(128)),
    )?);
    out.extend(gen_h6(
        H6Family::Octahedral,
        GridSpec::new(2.0, 8.0, shrink(142)),
        GridSpec::new(0.0, 0.9, shrink(144)),
    )?);
    Ok(out)
}

pub fn h8_suite() -> Result<Vec<Geometry>> {
    let mut out = gen_h8(H8Family::Paldus8, GridSpec::new(0.5, 5.0, 100))?;
    out.extend(gen_h8(H8Family::Chain, GridSpec::new(0.2, 6.0, 100))?);
    out.extend(gen_h8(H8Family::MobiusKantor, GridSpec::new(1.0, 4.0, 80))?);
    out.extend(gen_h8(H8Family::SquareAntiprism, GridSpec::new(0.0, 1.0, 41))?);
    out.extend(gen_h8(H8Family::OctagonTwist, GridSpec::new(0.0, 45.0, 41))?);
    Ok(out)
}

pub fn h10_suite() -> Result<Vec<Geometry>> {
    gen_h10_chain(GridSpec::new(0.5, 8.0, 150))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_pair_distances(g: &Geometry) -> Vec<f64> {
        let mut d = Vec::new();
        for i in 0..g.coords.len() {
            for j in 0..i {
                d.push(dist(&g.coords[i], &g.coords[j]));
            }
        }
        d.sort_by(|a, b| a.total_cmp(b));
        d
    }

    #[test]
    fn grid_endpoints_inclusive() {
        let v = GridSpec::new(0.2, 8.0, 156).values().unwrap();
        assert_eq!(v.len(), 156);
        assert_eq!(v[0], 0.2);
        assert_eq!(v[155], 8.0);
        for w in v.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn grid_rejects_bad_specs() {
        assert!(GridSpec::new(0.0, 1.0, 0).values().is_err());
        assert!(GridSpec::new(2.0, 1.0, 5).values().is_err());
        assert!(GridSpec::new(1.0, 2.0, 1).values().is_err());
        assert_eq!(GridSpec::new(1.5, 1.5, 1).values().unwrap(), vec![1.5]);
    }

    #[test]
    fn suite_counts() {
        assert_eq!(h2_suite().unwrap().len(), 156);
        assert_eq!(h4_suite().unwrap().len(), 865);
        assert_eq!(h6_suite().unwrap().len(), 1386);
        assert_eq!(h8_suite().unwrap().len(), 362);
        assert_eq!(h10_suite().unwrap().len(), 150);
    }

    #[test]
    fn fine_suite_full_count() {
        // full-scale counts only; the geometries themselves are cheap
        assert_eq!(h6_fine_suite(1.0).unwrap().len(), 61408);
    }

    #[test]
    fn chains_are_evenly_spaced() {
        let g = chain(10, 1.3);
        assert_eq!(g.n_atoms(), 10);
        for i in 1..10 {
            assert!((dist(&g.coords[i], &g.coords[i - 1]) - 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn hexagon_twist_endpoint_is_regular_hexagon() {
        let gs = gen_h6(
            H6Family::HexagonTwist,
            GridSpec::new(2.4, 2.4, 1),
            GridSpec::new(30.0, 30.0, 1),
        )
        .unwrap();
        let g = &gs[0];
        let r = 2.4 / 3.0f64.sqrt();
        // all six on one circle
        for c in &g.coords {
            assert!(((c[0] * c[0] + c[1] * c[1]).sqrt() - r).abs() < 1e-9);
        }
        // regular hexagon: six nearest-neighbor distances equal the
        // circumradius
        let d = sorted_pair_distances(g);
        for k in 0..6 {
            assert!((d[k] - r).abs() < 1e-9, "nn distance {}", d[k]);
        }
    }

    #[test]
    fn hexagon_twist_zero_is_valid_and_not_regular() {
        let gs = gen_h6(
            H6Family::HexagonTwist,
            GridSpec::new(2.4, 2.4, 1),
            GridSpec::new(0.0, 0.0, 1),
        )
        .unwrap();
        let d = sorted_pair_distances(&gs[0]);
        assert!(d[0] > MIN_DISTANCE);
        assert!((d[5] - d[0]).abs() > 1e-3, "twist 0 should not be regular");
    }

    #[test]
    fn octagon_twist_endpoint_is_regular_octagon() {
        let gs = gen_h8(H8Family::OctagonTwist, GridSpec::new(45.0, 45.0, 1)).unwrap();
        let g = &gs[0];
        let r = H8_SQUARE_SIDE / 2.0f64.sqrt();
        let side = 2.0 * r * (22.5f64).to_radians().sin();
        let d = sorted_pair_distances(g);
        for k in 0..8 {
            assert!((d[k] - side).abs() < 1e-9);
        }
    }

    #[test]
    fn antiprism_interpolation_endpoints() {
        let side = 2.0;
        let gs = gen_h6(
            H6Family::TriangularAntiprism,
            GridSpec::new(side, side, 1),
            GridSpec::new(0.0, 1.0, 2),
        )
        .unwrap();
        // t = 0: aligned prism, inter-plate distance = side
        let prism = &gs[0];
        assert!((dist(&prism.coords[0], &prism.coords[3]) - side).abs() < 1e-9);
        // t = 1: antiprism, nearest inter-plate neighbor = side
        let anti = &gs[1];
        let mut cross: Vec<f64> = (0..3)
            .flat_map(|i| (3..6).map(move |j| (i, j)))
            .map(|(i, j)| dist(&anti.coords[i], &anti.coords[j]))
            .collect();
        cross.sort_by(|a, b| a.total_cmp(b));
        assert!((cross[0] - side).abs() < 1e-9);
    }

    #[test]
    fn tetrahedral_passes_through_plane() {
        let gs = gen_h4(H4Family::Tetrahedral, GridSpec::new(2.0, 2.0, 1)).unwrap();
        assert_eq!(gs.len(), TETRAHEDRAL_INVERSION_STEPS);
        // regular tetrahedron at the first point: all six distances equal
        let d0 = sorted_pair_distances(&gs[0]);
        for x in &d0 {
            assert!((x - 2.0).abs() < 1e-9);
        }
        // the sweep ends at the mirror image
        let dl = sorted_pair_distances(gs.last().unwrap());
        for (a, b) in d0.iter().zip(dl.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        // the apex descends monotonically through the base plane; with an
        // even step count it straddles the plane instead of landing on it
        let apex: Vec<f64> = gs.iter().map(|g| g.coords[3][2]).collect();
        for w in apex.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(apex[0] > 0.0 && *apex.last().unwrap() < 0.0);
        let h = 2.0 * (2.0f64 / 3.0).sqrt();
        assert!((apex[0] - h).abs() < 1e-12);
        let closest = apex.iter().fold(f64::MAX, |m, z| m.min(z.abs()));
        assert!(closest < 0.1 * h);
        // the two halves of the sweep mirror each other
        let n = apex.len();
        for k in 0..n {
            assert!((apex[k] + apex[n - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn paldus_pairs_keep_fixed_bond() {
        let gs = gen_h4(H4Family::Paldus, GridSpec::new(0.5, 5.0, 3)).unwrap();
        let bond = PALDUS_INTRA_PAIR_BOHR / ANGSTROM_TO_BOHR;
        for g in &gs {
            assert!((dist(&g.coords[0], &g.coords[1]) - bond).abs() < 1e-12);
            assert!((dist(&g.coords[2], &g.coords[3]) - bond).abs() < 1e-12);
        }
    }

    #[test]
    fn mobius_kantor_cap_distance() {
        let gs = gen_h8(H8Family::MobiusKantor, GridSpec::new(1.0, 4.0, 4)).unwrap();
        for (g, want) in gs.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            // cap 4 sits on the +y edge between corners 0 and 1
            let d = dist(&g.coords[4], &g.coords[0]);
            assert!((d - want).abs() < 1e-9, "cap distance {} vs {}", d, want);
        }
        assert!(gen_h8(H8Family::MobiusKantor, GridSpec::new(0.5, 4.0, 4)).is_err());
    }

    #[test]
    fn xyz_round_trip() {
        let g = gen_h6(
            H6Family::Octahedral,
            GridSpec::new(2.5, 2.5, 1),
            GridSpec::new(0.3, 0.3, 1),
        )
        .unwrap()
        .remove(0);
        let text = g.to_xyz();
        let back = Geometry::from_xyz(&text, "mem.xyz").unwrap();
        assert_eq!(back.family, g.family);
        assert_eq!(back.params.len(), g.params.len());
        for (a, b) in g.coords.iter().zip(back.coords.iter()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn family_params_rebuild_every_suite_geometry() {
        let mut all = h2_suite().unwrap();
        all.extend(h4_suite().unwrap());
        all.extend(h6_suite().unwrap());
        all.extend(h8_suite().unwrap());
        all.extend(h10_suite().unwrap());
        for g in &all {
            let back = from_family_params(&g.family, g.n_atoms(), &g.params).unwrap();
            assert_eq!(back.family, g.family);
            for (a, b) in g.coords.iter().zip(back.coords.iter()) {
                for k in 0..3 {
                    assert_eq!(a[k], b[k], "family {}", g.family);
                }
            }
        }
        assert!(matches!(
            from_family_params("nonagon", 9, &[]),
            Err(Error::UnknownFamily { .. })
        ));
        assert!(matches!(
            from_family_params("tetrahedral", 4, &[("edge".into(), 2.0)]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn xyz_parse_errors_carry_line_numbers() {
        let bad = "2\nfamily=h2 r=1.0\nH 0 0 0\nHe 0 0 1\n";
        match Geometry::from_xyz(bad, "bad.xyz") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
        let short = "3\nfamily=x\nH 0 0 0\n";
        match Geometry::from_xyz(short, "short.xyz") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
        let coincident = "2\nfamily=x\nH 0 0 0\nH 0 0 0\n";
        assert!(Geometry::from_xyz(coincident, "c.xyz").is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = h4_suite().unwrap();
        let b = h4_suite().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_family_errors() {
        assert!(matches!(
            "ziggurat".parse::<H6Family>(),
            Err(Error::UnknownFamily { .. })
        ));
    }
}

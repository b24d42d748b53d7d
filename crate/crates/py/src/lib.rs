//! Python bindings for the mdpipe core library.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use mdpipe::analysis::{assign_radii, polar_mask, radius_of_gyration, sasa_frame, SasaParams};
use mdpipe::geometry::{kabsch as kabsch_fit, rmsd_raw};
use mdpipe::jobspec::{clean_jobspec, parse_jobspec, serialize_jobspec, validate_jobspec, JobSpec};
use mdpipe::namd_gen::{generate_configs, render_config, sanitize_label, InputPaths, NamdGenError};
use mdpipe::structure_io::{open_dcd, parse_pdb, write_pdb};
use mdpipe::{Frame, Selection, Topology, Vec3};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

type Point = (f64, f64, f64);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vec3(points: &[Point]) -> Vec<Vec3> {
    points.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect()
}

fn to_points(v: &[Vec3]) -> Vec<Point> {
    v.iter().map(|p| (p.x, p.y, p.z)).collect()
}

/// Parsed PDB coordinates.
#[pyclass(name = "Structure", module = "mdpipe_py", frozen)]
struct PyStructure {
    inner: mdpipe::Structure,
}

#[pymethods]
impl PyStructure {
    #[staticmethod]
    fn from_pdb(text: &str) -> PyResult<Self> {
        parse_pdb(text).map(|inner| PyStructure { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_pdb(&text)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Structure(atoms={}, residues={})", self.inner.len(), self.inner.residues.len())
    }

    #[getter]
    fn n_residues(&self) -> usize {
        self.inner.residues.len()
    }

    fn positions(&self) -> Vec<Point> {
        to_points(&self.inner.positions())
    }

    fn atom_names(&self) -> Vec<String> {
        self.inner.atoms.iter().map(|a| a.name.trim().to_string()).collect()
    }

    fn elements(&self) -> Vec<String> {
        self.inner.elements()
    }

    fn masses(&self) -> Vec<f64> {
        self.inner.masses()
    }

    fn to_pdb(&self) -> String {
        write_pdb(&self.inner)
    }

    /// Mass-weighted radius of gyration in Å.
    fn radius_of_gyration(&self) -> PyResult<f64> {
        radius_of_gyration(&self.inner.positions(), &self.inner.masses()).map_err(value_err)
    }

    /// Shrake–Rupley SASA in Å² over all atoms, split by polarity.
    #[pyo3(signature = (probe=1.4, n_points=960))]
    fn sasa(&self, probe: f64, n_points: usize) -> PyResult<HashMap<&'static str, f64>> {
        let s = &self.inner;
        let sel = Selection::all(s.len()).map_err(value_err)?;
        let names: Vec<String> = s.atoms.iter().map(|a| a.name.clone()).collect();
        let radii = assign_radii(&sel, &s.elements(), &names, &BTreeMap::new()).map_err(value_err)?;
        let topo = Topology::from_structure_by_distance(s);
        let polar = polar_mask(&s.elements(), &topo.bonds);
        let frame = Frame::new(0, s.positions());
        let r = sasa_frame(&frame, &sel, &radii.radii, &polar, SasaParams { probe, n_points }).map_err(value_err)?;
        Ok(HashMap::from([("total", r.total), ("polar", r.polar), ("apolar", r.apolar)]))
    }
}

/// Optimal rigid fit of `mobile` onto `reference`: (rotation rows,
/// translation, rmsd after fitting).
#[pyfunction]
#[pyo3(signature = (mobile, reference, weights=None))]
fn kabsch(mobile: Vec<Point>, reference: Vec<Point>, weights: Option<Vec<f64>>) -> PyResult<([[f64; 3]; 3], Point, f64)> {
    let fit = kabsch_fit(&to_vec3(&mobile), &to_vec3(&reference), weights.as_deref()).map_err(value_err)?;
    let t = fit.translation;
    Ok((fit.rotation.0, (t.x, t.y, t.z), fit.rmsd_after))
}

#[pyfunction]
#[pyo3(signature = (a, b, superpose=true))]
fn rmsd(a: Vec<Point>, b: Vec<Point>, superpose: bool) -> PyResult<f64> {
    let (a, b) = (to_vec3(&a), to_vec3(&b));
    if superpose {
        kabsch_fit(&a, &b, None).map(|f| f.rmsd_after).map_err(value_err)
    } else {
        rmsd_raw(&a, &b, None).map_err(value_err)
    }
}

/// All frames of a DCD file as lists of (x, y, z).
#[pyfunction]
fn read_dcd(path: PathBuf) -> PyResult<Vec<Vec<Point>>> {
    let reader = open_dcd(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
    let (_, frames) = reader.read_all().map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
    Ok(frames.iter().map(|f| to_points(&f.coords)).collect())
}

fn parse_spec(text: &str) -> PyResult<JobSpec> {
    parse_jobspec(text).map(|p| p.spec).map_err(value_err)
}

/// Validation report as JSON; the structure, when given, enables the
/// preflight and membrane checks.
#[pyfunction]
#[pyo3(signature = (spec_yaml, structure=None))]
fn validate(spec_yaml: &str, structure: Option<PyRef<'_, PyStructure>>) -> PyResult<String> {
    let spec = parse_spec(spec_yaml)?;
    Ok(validate_jobspec(&spec, structure.as_ref().map(|s| &s.inner)).to_json())
}

/// Spec with defaults filled in, as YAML.
#[pyfunction]
fn normalize_jobspec(spec_yaml: &str) -> PyResult<String> {
    Ok(serialize_jobspec(&clean_jobspec(&parse_spec(spec_yaml)?)))
}

/// NAMD configs keyed by file name.
#[pyfunction]
#[pyo3(signature = (spec_yaml, psf=None, pdb=None, parameter_files=None, xsc=None))]
fn generate_namd(
    spec_yaml: &str,
    psf: Option<PathBuf>,
    pdb: Option<PathBuf>,
    parameter_files: Option<Vec<PathBuf>>,
    xsc: Option<PathBuf>,
) -> PyResult<BTreeMap<String, String>> {
    let spec = parse_spec(spec_yaml)?;
    let base = sanitize_label(&spec.label);
    let paths = InputPaths {
        structure: psf.unwrap_or_else(|| format!("{base}.psf").into()),
        coordinates: pdb.unwrap_or_else(|| format!("{base}.pdb").into()),
        parameter_files: parameter_files.unwrap_or_else(mdpipe::pipeline::default_parameter_files),
        extended_system: xsc,
    };
    match generate_configs(&spec, &paths) {
        Ok(configs) => Ok(configs.iter().map(|c| (c.file_name(), render_config(c))).collect()),
        Err(NamdGenError::Refused(report)) => Err(PyValueError::new_err(report.to_json())),
        Err(e) => Err(value_err(e)),
    }
}

#[pymodule]
fn mdpipe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add_function(wrap_pyfunction!(kabsch, m)?)?;
    m.add_function(wrap_pyfunction!(rmsd, m)?)?;
    m.add_function(wrap_pyfunction!(read_dcd, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_jobspec, m)?)?;
    m.add_function(wrap_pyfunction!(generate_namd, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! The shipped thermodynamic content: schema files, the ideal-gas material
//! table and the physical constants.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::equation::EquationTemplate;
use crate::ontology::{
    load_schema, read_sources, validate_instance_document, OntologySchema, ProcessRegistry,
    SchemaError, SchemaSource, ValidationReport,
};

/// Universal gas constant, J/(mol·K).
pub const R_UNIV: f64 = 8.31446261815324;
/// Reference temperature, K. Specific internal energy is zero here.
pub const T0: f64 = 293.15;
/// Reference pressure, Pa. Specific entropy is zero at (T0, p0).
pub const P0: f64 = 1.0e5;

/// Name of the material-table file inside an ontology directory.
pub const MATERIALS_FILE: &str = "materials.yaml";

/// Concept every chosen material is specialized to.
pub const IDEAL_GAS: &str = "IdealGas";

const BUILTIN_SCHEMA: &[(&str, &str)] = &[
    (
        "attributes.yaml",
        include_str!("../data/ontology/attributes.yaml"),
    ),
    (
        "concepts.yaml",
        include_str!("../data/ontology/concepts.yaml"),
    ),
    (
        "equations.yaml",
        include_str!("../data/ontology/equations.yaml"),
    ),
    ("rules.yaml", include_str!("../data/ontology/rules.yaml")),
    (
        "variables.yaml",
        include_str!("../data/ontology/variables.yaml"),
    ),
];
const BUILTIN_MATERIALS: &str = include_str!("../data/ontology/materials.yaml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRecord {
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    /// kg/mol
    pub molar_mass: f64,
    /// J/(kg·K)
    pub specific_gas_constant: f64,
    /// J/(kg·K)
    pub cv: f64,
    /// J/(kg·K)
    pub cp: f64,
    pub is_ideal_gas: bool,
}

impl MaterialRecord {
    pub fn kappa(&self) -> f64 {
        self.cp / self.cv
    }

    fn matches(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
            || self.synonyms.iter().any(|s| s.eq_ignore_ascii_case(name))
    }

    /// R = R_univ / M and cp = cv + R to relative 1e-9, everything positive.
    pub fn check(&self) -> Result<(), String> {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        if !(self.molar_mass > 0.0
            && self.specific_gas_constant > 0.0
            && self.cv > 0.0
            && self.cp > 0.0)
        {
            return Err("molar_mass, specific_gas_constant, cv and cp must be positive".into());
        }
        if rel(self.specific_gas_constant, R_UNIV / self.molar_mass) > 1e-9 {
            return Err("specific_gas_constant differs from R_univ / molar_mass".into());
        }
        if rel(self.cp, self.cv + self.specific_gas_constant) > 1e-9 {
            return Err("cp differs from cv + specific_gas_constant".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KnowledgeError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("material table: {0}")]
    MaterialTable(String),
    #[error("material `{name}`: {message}")]
    InvalidMaterial { name: String, message: String },
    #[error("unknown material `{name}`; available: {}", available.join(", "))]
    UnknownMaterial {
        name: String,
        available: Vec<String>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    materials: Vec<MaterialRecord>,
}

/// Schema, material table and process classes, immutable once built.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub schema: Arc<OntologySchema>,
    /// Sorted by name.
    pub materials: Vec<MaterialRecord>,
    pub processes: ProcessRegistry,
}

/// The shipped schema.
pub fn builtin_schema() -> OntologySchema {
    let sources: Vec<SchemaSource> = BUILTIN_SCHEMA
        .iter()
        .map(|(name, text)| SchemaSource::new(*name, *text))
        .collect();
    load_schema(&sources).expect("shipped schema is valid")
}

impl KnowledgeBase {
    pub fn builtin() -> Self {
        Self::from_parts(builtin_schema(), BUILTIN_MATERIALS)
            .expect("shipped knowledge base is valid")
    }

    /// Loads every schema file of `dir` plus its `materials.yaml`.
    pub fn from_dir(dir: &Path) -> Result<Self, KnowledgeError> {
        let sources = read_sources(dir, &[MATERIALS_FILE])?;
        let schema = load_schema(&sources)?;
        let path = dir.join(MATERIALS_FILE);
        let materials = std::fs::read_to_string(&path).map_err(|e| SchemaError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_parts(schema, &materials)
    }

    pub fn from_parts(
        schema: OntologySchema,
        materials_yaml: &str,
    ) -> Result<Self, KnowledgeError> {
        let file: MaterialFile = serde_yaml::from_str(materials_yaml)
            .map_err(|e| KnowledgeError::MaterialTable(e.to_string()))?;
        let mut materials = file.materials;
        materials.sort_by(|a, b| a.name.cmp(&b.name));
        for (i, m) in materials.iter().enumerate() {
            m.check()
                .map_err(|message| KnowledgeError::InvalidMaterial {
                    name: m.name.clone(),
                    message,
                })?;
            let clash = materials[..i].iter().find(|other| {
                std::iter::once(&m.name)
                    .chain(&m.synonyms)
                    .any(|n| other.matches(n))
            });
            if let Some(other) = clash {
                return Err(KnowledgeError::InvalidMaterial {
                    name: m.name.clone(),
                    message: format!("name or synonym clashes with `{}`", other.name),
                });
            }
        }
        let processes = ProcessRegistry::builtin();
        for class in processes.iter() {
            class.check(&schema)?;
        }
        Ok(KnowledgeBase {
            schema: Arc::new(schema),
            materials,
            processes,
        })
    }

    /// Case-insensitive lookup by name or synonym.
    pub fn material_lookup(&self, name: &str) -> Result<&MaterialRecord, KnowledgeError> {
        self.materials
            .iter()
            .find(|m| m.matches(name.trim()))
            .ok_or_else(|| KnowledgeError::UnknownMaterial {
                name: name.to_string(),
                available: self.material_names(),
            })
    }

    pub fn material_names(&self) -> Vec<String> {
        self.materials.iter().map(|m| m.name.clone()).collect()
    }

    /// Equation templates sorted by name.
    pub fn equation_catalog(&self) -> Vec<Arc<EquationTemplate>> {
        self.schema.equations.values().cloned().collect()
    }

    /// Schema conformance of a problem document, plus the material name.
    pub fn validate_problem(&self, text: &str) -> Result<ValidationReport, SchemaError> {
        let mut report = validate_instance_document(&self.schema, &self.processes, text)?;
        let doc: serde_yaml::Value = serde_yaml::from_str(text).unwrap_or_default();
        if let Some(name) = doc.get("material").and_then(|m| m.as_str()) {
            if let Err(e) = self.material_lookup(name) {
                report.violations.push(crate::ontology::Violation {
                    path: "material".into(),
                    message: e.to_string(),
                });
            }
        }
        Ok(report)
    }
}

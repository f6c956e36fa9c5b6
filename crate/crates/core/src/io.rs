//! JSON documents for instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteSpeedMenu, Instance, InstanceKind, Job, PowerLaw};
use crate::rational::{serde_q, serde_q_opt, Q};
use crate::speed::PiecewiseConstantSpeed;

/// Machine description of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MachineModel {
    Speed { speed: PiecewiseConstantSpeed },
    Menu { menu: DiscreteSpeedMenu },
    Alpha {
        #[serde(with = "serde_q")]
        alpha: Q,
    },
}

/// `{ "jobs": [...], "speed" | "menu" | "alpha": ..., "budget": "p/q" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub jobs: Vec<Job>,
    #[serde(flatten)]
    pub model: MachineModel,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "serde_q_opt")]
    pub budget: Option<Q>,
}

impl InstanceDocument {
    pub fn kind(&self) -> InstanceKind {
        match self.model {
            MachineModel::Speed { .. } => InstanceKind::GivenSpeed,
            MachineModel::Menu { .. } => InstanceKind::DiscreteEnergy,
            MachineModel::Alpha { .. } => InstanceKind::ContinuousEnergy,
        }
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::new(self.jobs.clone(), self.kind())
    }

    pub fn power_law(&self) -> Result<PowerLaw> {
        match &self.model {
            MachineModel::Alpha { alpha } => PowerLaw::new(alpha.clone()),
            _ => Err(Error::InvalidInstance("instance has no alpha".into())),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        doc.instance()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance documents serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn speed_document_round_trips() {
        let text = r#"{"jobs":[{"id":1,"v":"3/2","w":"2","r":"0"},{"id":2,"v":1,"w":0.5}],
            "speed":{"breakpoints":["0","5"],"speeds":["2","1"]}}"#;
        let doc = InstanceDocument::from_json(text).unwrap();
        assert_eq!(doc.kind(), InstanceKind::GivenSpeed);
        assert_eq!(doc.jobs[0].volume, q(3, 2));
        assert_eq!(doc.jobs[1].weight, q(1, 2));
        let again = InstanceDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn menu_and_alpha_documents() {
        let text = r#"{"jobs":[{"id":1,"v":"2","w":"1"}],"menu":{"speeds":["2","1"],"power":["4","1"]},"budget":"3"}"#;
        let doc = InstanceDocument::from_json(text).unwrap();
        assert_eq!(doc.kind(), InstanceKind::DiscreteEnergy);
        assert_eq!(doc.budget, Some(qi(3)));
        let text = r#"{"jobs":[{"id":1,"v":"2","w":"1"}],"alpha":"3","budget":"1"}"#;
        let doc = InstanceDocument::from_json(text).unwrap();
        assert_eq!(doc.power_law().unwrap().alpha(), &qi(3));
        assert_eq!(InstanceDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn rejects_invalid_documents() {
        assert!(InstanceDocument::from_json(r#"{"jobs":[],"alpha":"2"}"#).is_err());
        assert!(InstanceDocument::from_json(r#"{"jobs":[{"id":1,"v":"1","w":"1"}]}"#).is_err());
        assert!(InstanceDocument::from_json(r#"{"jobs":[{"id":1,"v":"x","w":"1"}],"alpha":"2"}"#).is_err());
    }
}

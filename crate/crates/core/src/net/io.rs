use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Layer, NetError, Network};

/// On-disk layout: `{"architecture": [d, N_1, …], "layers": [{"A": [...], "b": [...]}]}`
/// with `A` flattened row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub architecture: Vec<usize>,
    pub layers: Vec<LayerDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDoc {
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl From<&Network> for NetworkDoc {
    fn from(net: &Network) -> Self {
        Self {
            architecture: net.architecture().dims().to_vec(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    a: l.weights.iter().copied().collect(),
                    b: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkDoc> for Network {
    type Error = NetError;

    fn try_from(doc: NetworkDoc) -> Result<Self, NetError> {
        let dims = &doc.architecture;
        if dims.len() != doc.layers.len() + 1 {
            return Err(NetError::InvalidArchitecture(format!(
                "architecture has {} layers but {} were given",
                dims.len().saturating_sub(1),
                doc.layers.len()
            )));
        }
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(j, l)| {
                let (rows, cols) = (dims[j + 1], dims[j]);
                if l.a.len() != rows * cols {
                    return Err(NetError::DimensionMismatch {
                        expected: rows * cols,
                        got: l.a.len(),
                    });
                }
                let w = Array2::from_shape_vec((rows, cols), l.a).expect("length checked");
                Ok(Layer::new(w, Array1::from(l.b)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Network::new(dims[0], layers)
    }
}

impl Network {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetworkDoc::from(self)).expect("finite networks serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, NetError> {
        let doc: NetworkDoc = serde_json::from_str(s)?;
        Network::try_from(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{he_init, Architecture};

    #[test]
    fn json_round_trip_is_bit_exact() {
        let net = he_init(&Architecture::new(vec![3, 7, 5, 1]).unwrap(), 42);
        let back = Network::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_wrong_lengths() {
        let s = r#"{"architecture":[1,2,1],"layers":[{"A":[1.0],"b":[0.0,0.0]},{"A":[1.0,1.0],"b":[0.0]}]}"#;
        assert!(Network::from_json(s).is_err());
    }
}

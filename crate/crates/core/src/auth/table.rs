use std::collections::BTreeMap;

use crate::geometry::GeoCoord;

/// Latest expected and estimated direction of one neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaRecord {
    pub id: Vec<u8>,
    pub gps: GeoCoord,
    /// Expected angle of arrival from the claimed position, wrapped to `(-pi, pi]`.
    pub theta_b: f64,
    pub theta_hat: f64,
    /// Bound used in the last test.
    pub crb: f64,
    pub updated_at_ms: u64,
}

/// One record per identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoaRecordSet {
    records: BTreeMap<Vec<u8>, AoaRecord>,
}

impl AoaRecordSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the record for `record.id`.
    pub fn upsert(&mut self, record: AoaRecord) {
        self.records.insert(record.id.clone(), record);
    }

    pub fn get(&self, id: &[u8]) -> Option<&AoaRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AoaRecord> {
        self.records.values()
    }
}

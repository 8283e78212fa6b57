//! District cost sources shared by the local search and the exact baseline.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::geom::RegionModel;
use crate::oracles::{CostOracle, FeatureContext};
use crate::saa;
use crate::scenario::ScenarioSet;

/// Cost of one district given its sorted member ids.
pub trait DistrictCost: Sync {
    fn cost(&self, members: &[usize]) -> Result<f64>;
}

impl<C: DistrictCost + ?Sized> DistrictCost for &C {
    fn cost(&self, members: &[usize]) -> Result<f64> {
        (**self).cost(members)
    }
}

/// Learned oracle prediction.
pub struct OracleCost<'a> {
    pub oracle: &'a CostOracle,
    pub ctx: &'a FeatureContext,
}

impl DistrictCost for OracleCost<'_> {
    fn cost(&self, members: &[usize]) -> Result<f64> {
        self.oracle.predict(self.ctx, members)
    }
}

/// Sample-average routing cost over a scenario set.
pub struct SaaCost<'a> {
    pub region: &'a RegionModel,
    pub scenarios: &'a ScenarioSet,
    /// Exhaustive tours instead of the heuristic.
    pub exact: bool,
}

impl DistrictCost for SaaCost<'_> {
    fn cost(&self, members: &[usize]) -> Result<f64> {
        if self.exact {
            saa::saa_district_cost_exact(self.region, members, self.scenarios)
        } else {
            saa::saa_district_cost(self.region, members, self.scenarios)
        }
    }
}

/// Precomputed costs; unknown districts are an error.
#[derive(Debug, Clone, Default)]
pub struct TableCost {
    table: HashMap<Vec<usize>, f64>,
}

impl TableCost {
    pub fn new(entries: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Self {
        Self {
            table: entries
                .into_iter()
                .map(|(mut m, c)| {
                    m.sort_unstable();
                    (m, c)
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl DistrictCost for TableCost {
    fn cost(&self, members: &[usize]) -> Result<f64> {
        self.table
            .get(members)
            .copied()
            .ok_or_else(|| Error::Missing(format!("no cost for district {members:?}")))
    }
}

/// Closure cost source.
pub struct FnCost<F>(pub F);

impl<F: Fn(&[usize]) -> Result<f64> + Sync> DistrictCost for FnCost<F> {
    fn cost(&self, members: &[usize]) -> Result<f64> {
        (self.0)(members)
    }
}

/// Caches another cost source by member set.
pub struct Memo<C> {
    inner: C,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
}

impl<C: DistrictCost> Memo<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

impl<C: DistrictCost> DistrictCost for Memo<C> {
    fn cost(&self, members: &[usize]) -> Result<f64> {
        if let Some(&c) = self.cache.lock().ok().and_then(|c| c.get(members).copied()).as_ref() {
            return Ok(c);
        }
        let c = self.inner.cost(members)?;
        if let Ok(mut cache) = self.cache.lock() {
            cache.insert(members.to_vec(), c);
        }
        Ok(c)
    }
}

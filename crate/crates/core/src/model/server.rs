use super::config::{ServerId, SystemConfig};
use super::plan::Segment;
use super::pool::{pad_keys, PadSource};
use super::query::{Answer, Query};
use super::store::MessageStore;
use super::views::{DatabaseView, Knowledge};
use crate::error::{config_err, Error, Result};
use crate::field::{add_vec, dot};

/// A server during the retrieval phase: its view (fixed by verification),
/// the shared message store and the shared pads.
pub struct ServerNode<'a> {
    pub id: ServerId,
    cfg: &'a SystemConfig,
    view: DatabaseView,
    segments: &'a [Segment],
    store: &'a MessageStore,
    pool: &'a dyn PadSource,
}

impl<'a> ServerNode<'a> {
    pub fn new(
        cfg: &'a SystemConfig,
        id: ServerId,
        knowledge: &Knowledge,
        segments: &'a [Segment],
        store: &'a MessageStore,
        pool: &'a dyn PadSource,
    ) -> Self {
        ServerNode {
            id,
            cfg,
            view: DatabaseView::from_knowledge(cfg, id, knowledge),
            segments,
            store,
            pool,
        }
    }

    pub fn view(&self) -> &DatabaseView {
        &self.view
    }

    /// Answers every group with `h^T w + pad`. Any member outside the view
    /// aborts the whole answer.
    pub fn answer(&self, query: &Query) -> Result<Answer> {
        let central = self.cfg.is_central(self.id);
        let mut rows = Vec::with_capacity(query.groups.len());
        for g in &query.groups {
            let seg = self
                .segments
                .iter()
                .find(|s| s.component == g.component)
                .ok_or_else(|| config_err(format!("server {} has no {:?} segment", self.id, g.component)))?;
            if g.coeffs.len() != g.members.len() {
                return Err(config_err(format!(
                    "group with {} members carries {} coefficients",
                    g.members.len(),
                    g.coeffs.len()
                )));
            }
            let mut subpackets = Vec::with_capacity(g.members.len());
            for m in &g.members {
                if !self.view.contains(&m.key) {
                    return Err(Error::AccessViolation {
                        server: self.id,
                        key: self.cfg.label(&m.key),
                    });
                }
                if m.subpacket as usize >= seg.subpackets {
                    return Err(config_err(format!("sub-packet index {} out of range", m.subpacket)));
                }
                let msg = self
                    .store
                    .get(&m.key)
                    .ok_or_else(|| config_err("message missing from store"))?;
                subpackets.push(msg[seg.range(m.subpacket as usize)].to_vec());
            }
            let width = seg.subpacket_len();
            let mut row = if subpackets.is_empty() {
                self.cfg.field.zeros(width)
            } else {
                dot(&g.coeffs, &subpackets)?
            };
            let keys: Vec<_> = g.members.iter().map(|m| m.key.clone()).collect();
            for chunk in pad_keys(g.component, central, self.cfg.k, &keys)? {
                row = add_vec(&row, &self.pool.chunk(&chunk, width))?;
            }
            rows.push(row);
        }
        Ok(Answer { rows })
    }
}

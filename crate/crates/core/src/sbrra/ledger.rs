//! Per-cellular-user RB inventory and sharing history.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which RB counts a cellular user may hand over in one share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShareRule {
    /// `1 ≤ k ≤ holdings − 1`: the partner always keeps at least one RB.
    #[default]
    RetainOne,
    /// `1 ≤ k ≤ r − 1` and `k ≤ holdings`: the bound is taken against the
    /// grant size, so a partner may be drained within one iteration.
    GrantBound,
}

impl ShareRule {
    pub fn admits(&self, k: u32, holdings: u32, n_rb: u32) -> bool {
        if k == 0 {
            return false;
        }
        match self {
            ShareRule::RetainOne => k < holdings,
            ShareRule::GrantBound => k < n_rb && k <= holdings,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ShareRule::RetainOne => "retain_one",
            ShareRule::GrantBound => "grant_bound",
        }
    }
}

impl std::str::FromStr for ShareRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "retain_one" => Ok(Self::RetainOne),
            "grant_bound" => Ok(Self::GrantBound),
            other => Err(format!("expected retain_one|grant_bound, got `{other}`")),
        }
    }
}

/// One RB share from a cellular user to a D2D pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareRecord<T> {
    pub iteration: u32,
    pub pair_id: usize,
    pub k: u32,
    pub sinr_per_rb: T,
    /// Holdings of the cellular user just before this share.
    pub pre_share_holdings: u32,
    /// Throughput reported for the pair, including any aggregated chain.
    pub reported_bps: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellularAccount<T> {
    pub holdings: u32,
    pub last_grant_iteration: u32,
    pub replenishments: u32,
    pub shared_total: u64,
    pub history: Vec<ShareRecord<T>>,
}

/// RB inventory keyed by cellular slot id. Slots are created lazily with a
/// full grant of `n_rb` and persist across iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct RbLedger<T> {
    n_rb: u32,
    accounts: Vec<CellularAccount<T>>,
}

impl<T: Scalar> RbLedger<T> {
    pub fn new(n_rb: u32) -> Self {
        Self { n_rb, accounts: Vec::new() }
    }

    pub fn n_rb(&self) -> u32 {
        self.n_rb
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    pub fn ensure_slots(&mut self, count: usize, iteration: u32) {
        while self.accounts.len() < count {
            self.accounts.push(CellularAccount {
                holdings: self.n_rb,
                last_grant_iteration: iteration,
                replenishments: 0,
                shared_total: 0,
                history: Vec::new(),
            });
        }
    }

    pub fn account(&self, id: usize) -> Option<&CellularAccount<T>> {
        self.accounts.get(id)
    }

    pub fn accounts(&self) -> &[CellularAccount<T>] {
        &self.accounts
    }

    pub fn holdings(&self, id: usize) -> u32 {
        self.accounts.get(id).map_or(0, |a| a.holdings)
    }

    /// Tops up every account holding fewer than `n_rb / 2` RBs by `n_rb`.
    /// Returns the replenished ids.
    pub fn replenish(&mut self, iteration: u32) -> Vec<usize> {
        let n_rb = self.n_rb;
        let mut topped = Vec::new();
        for (id, acc) in self.accounts.iter_mut().enumerate() {
            if 2 * acc.holdings < n_rb {
                acc.holdings += n_rb;
                acc.replenishments += 1;
                acc.last_grant_iteration = iteration;
                topped.push(id);
            }
        }
        topped
    }

    pub fn can_share(&self, id: usize, k: u32, rule: ShareRule) -> bool {
        self.accounts.get(id).is_some_and(|a| rule.admits(k, a.holdings, self.n_rb))
    }

    /// Takes `k` RBs from account `id`, returning the holdings before the share.
    pub fn share(&mut self, id: usize, k: u32, rule: ShareRule) -> Result<u32> {
        let n_rb = self.n_rb;
        let acc = self
            .accounts
            .get_mut(id)
            .ok_or_else(|| Error::Contract(format!("no ledger account for cellular user {id}")))?;
        if !rule.admits(k, acc.holdings, n_rb) {
            return Err(Error::Contract(format!(
                "cellular user {id} holding {} RBs cannot share {k} under {}",
                acc.holdings,
                rule.as_str()
            )));
        }
        let pre = acc.holdings;
        acc.holdings -= k;
        acc.shared_total += u64::from(k);
        Ok(pre)
    }

    pub fn record(&mut self, id: usize, rec: ShareRecord<T>) {
        self.accounts[id].history.push(rec);
    }

    pub fn history(&self, id: usize) -> &[ShareRecord<T>] {
        self.accounts.get(id).map_or(&[], |a| &a.history)
    }

    /// `holdings = r + r·replenishments − Σ k` for every account.
    pub fn is_conserved(&self) -> bool {
        self.accounts.iter().all(|a| {
            i128::from(a.holdings)
                == i128::from(self.n_rb) * (1 + i128::from(a.replenishments)) - i128::from(a.shared_total)
        })
    }
}

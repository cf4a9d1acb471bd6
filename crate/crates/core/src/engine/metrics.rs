use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact non-negative rational, serialized as `"num/den"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rational(pub Ratio<u64>);

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Rational(Ratio::from_integer(0))
        } else {
            Rational(Ratio::new(num, den))
        }
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let (n, den) = s.split_once('/').ok_or_else(|| serde::de::Error::custom("expected num/den"))?;
        let n = n.parse().map_err(serde::de::Error::custom)?;
        let den = den.parse().map_err(serde::de::Error::custom)?;
        Ok(Rational::new(n, den))
    }
}

/// One operationalisation per granularity axis, computed from the payments
/// of one scenario over a one-month horizon:
///
/// - time: payments per trade per month, i.e. (payment, trade) incidences
///   divided by the number of distinct trades paid;
/// - trade: parties compensated per payment, i.e. trades covered per payment
///   (a general-contractor payment covers every trade it pools);
/// - product: building elements covered per payment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GranularityMetrics {
    pub payments_per_trade_per_month: Rational,
    pub mean_payees_per_payment: Rational,
    pub mean_elements_per_payment: Rational,
    pub failure_count: u32,
}

/// Minimal view of a payment needed for the metrics.
pub struct PaymentShape<'a> {
    pub trades: &'a [String],
    pub element_count: u64,
}

impl GranularityMetrics {
    pub fn compute<'a>(payments: impl IntoIterator<Item = PaymentShape<'a>>, failure_count: u32) -> Self {
        let mut count = 0u64;
        let mut incidences = 0u64;
        let mut elements = 0u64;
        let mut trades = BTreeSet::new();
        for p in payments {
            count += 1;
            incidences += p.trades.len() as u64;
            elements += p.element_count;
            trades.extend(p.trades.iter().cloned());
        }
        GranularityMetrics {
            payments_per_trade_per_month: Rational::new(incidences, trades.len() as u64),
            mean_payees_per_payment: Rational::new(incidences, count),
            mean_elements_per_payment: Rational::new(elements, count),
            failure_count,
        }
    }
}

//! Market profitability of grid-connected battery storage.
//!
//! * [`market_data`]: hourly price and reserve series, CSV ingestion, local-day
//!   partitioning and price statistics.
//! * [`battery`]: wear cost and efficiency split.
//! * [`arbitrage`]: perfect-foresight one-cycle-per-day arbitrage.
//! * [`reserve`]: secondary-reserve break-even band prices.
//! * [`sweep`]: potentially profitable utilization time over a wear-cost grid.
//!
//! Nothing in this crate performs network I/O.

pub mod arbitrage;
pub mod battery;
pub mod market_data;
pub mod reserve;
pub mod sweep;
pub mod units;

pub use arbitrage::{DailyArbitrageResult, ServiceBasket};
pub use battery::{BatteryParams, EfficiencyPair};
pub use market_data::{
    DateRange, Direction, HourlyPriceSeries, MarketKind, ReserveMarketSeries, ValidationProfile,
};
pub use reserve::{PriceMeans, ReserveEconomics, ReserveTotals};
pub use sweep::{Application, ApplicationKind, UtilizationCurve, WearGrid};
pub use units::{EurPerMw, EurPerMwh, MwhPerMw};

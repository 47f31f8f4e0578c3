"""Forecasting toolkit for country-commodity-year trade panels."""
from .arima import (ArimaFit, ArimaSpec, ForecastTable, arima_fit, difference,
                    forecast_intervals, select_order)
from .errors import TradecastError
from .kmeans import ClusterModel, assign, kmeans_fit, standardize
from .panel import (COMMODITIES, EconRecord, PanelTable, TradeRecord, filter_commodity,
                    inner_join, parse_econ_csv, parse_trade_csv, read_panel_csv, time_split,
                    top_exporters, write_panel_csv)
from .stats import (CorrelationMatrix, OlsModel, correlation_matrix, ols_fit, ols_forecast,
                    pearson, r_squared)

__version__ = "0.1.0"

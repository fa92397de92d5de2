"""Correlation-network analysis of financial returns: Pearson and rank
correlation matrices, minimum spanning trees, stability and topology
measures, minimum-variance portfolios, and bootstrap robustness."""

from .bootstrap import (
    BootstrapSpec,
    RobustnessRow,
    RobustnessTable,
    circular_bootstrap,
    robustness_rows,
    robustness_table,
)
from .correlation import (
    KENDALL,
    METHODS,
    PEARSON,
    SPEARMAN,
    CorrelationMatrix,
    DistanceMatrix,
    coefficient_scatter,
    kendall_tau_b,
    largest_eigenvalue,
    pearson,
    spearman,
    tie_group_sizes,
    to_distance,
)
from .data import (
    GICS_SECTORS,
    PriceTable,
    ReturnPanel,
    SectorMap,
    WindowSpec,
    clean_prices,
    load_prices,
    load_sectors,
    log_returns,
    sample_variances,
    windows,
)
from .errors import (
    ConfigError,
    CsvFormatError,
    DataError,
    RankMstError,
    SolverError,
)
from .gaussianity import (
    KSRecord,
    ks_distance_gaussian,
    node_ks_correlation,
    quantile_normalize,
    spearman_rho,
)
from .portfolio import (
    CovarianceMatrix,
    PortfolioWeights,
    ShrunkCovariance,
    covariance_from_correlation,
    kkt_residual,
    min_variance_weights,
    sharpe_out_of_sample,
    shrink,
    turnover,
)
from .stability import (
    StabilityReport,
    TreeSequence,
    edge_difference,
    matrix_difference,
    node_difference,
    persistent_edges,
    stability_report,
    survival_ratio,
)
from .topology import (
    CentralityVector,
    SectorCentrality,
    TopologySummary,
    average_shortest_path,
    betweenness_centrality,
    degree_centrality,
    degree_powerlaw_exponent,
    leaf_fraction,
    mean_occupation_layer,
    sector_centrality,
    topology_summary,
)
from .tree import FilteredCorrelation, Tree, TreeEdge, kruskal_mst, mst_filter

__version__ = "0.1.0"

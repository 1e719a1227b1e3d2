"""Conflict-discussion analytics: verdict mining, clustering, annotation, classification."""

from .annotation import (
    Aspect,
    AnnotationRecord,
    AgreementReport,
    agreement_report,
    consolidate,
    label_distribution,
    merge_label,
    read_annotations_csv,
)
from .classifier import (
    FocalProbeClassifier,
    ProbeModel,
    TrainConfig,
    TrainingExample,
    build_examples,
    focal_loss,
    load_probe,
    predict,
    save_probe,
    train_probe,
)
from .cluster import (
    LouvainCommunities,
    Partition,
    SweepReport,
    drop_small_clusters,
    louvain,
    modularity,
    stability_sweep,
)
from .corpus import (
    Comment,
    CorpusStats,
    Post,
    Verdict,
    VerdictLexicon,
    VerdictRecord,
    DEFAULT_LEXICON,
    corpus_stats,
    extract_situation,
    extract_verdict,
    mine_verdicts,
    parse_corpus,
)
from .embeddings import (
    EmbeddingMatrix,
    SimilarityMatrix,
    load_embeddings,
    normalized_cosine,
    pairwise_similarity,
    write_embeddings,
)
from .graph import SimilarityGraph, build_pruned_graph
from .metrics import (
    MetricsReport,
    adjusted_rand_index,
    evaluate,
    matthews_correlation,
)
from .model_selection import SplitSpec, stratified_split
from .stats import (
    ContingencyTable2x2,
    fisher_exact,
    permutation_test,
    verdict_ratio_difference,
)

__version__ = "0.1.0"

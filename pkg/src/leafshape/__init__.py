"""Shape-only plant-leaf identification.

The pipeline: binary segmentation with stem removal, closed-boundary
extraction, multi-scale local area integral invariants along the boundary,
a fixed 719-entry shape/signal feature vector, PCA reduction, and a
one-vs-one RBF SVM trained with SMO.
"""

from .classifier import (BinarySvm, OvoSvmModel, SvmConfig, balanced_weights,
                         predict_topn, rbf_kernel, train_binary, train_ovo)
from .contours import (Contour, ContourSelectConfig, SampledContour,
                       canny_fallback, extract_contours, resample,
                       select_leaf_contour)
from .dataset import Dataset, Split, load_dataset, split_dataset
from .features import (area_under_curve, assemble, basic_shape_features,
                       bending_energy, feature_count, rfft_spectrum,
                       signal_entropy, spectral_centroid, statistical_features)
from .harness import (EvalReport, evaluate, fit_reduced_model, grid_search,
                      load_model, metrics_from_confusion, save_model)
from .laii import (LaiiSignal, ScaleSet, disk_fractions, disk_fractions_fast,
                   laii_at_scale, laii_multiscale, write_laii_csv)
from .pipeline import (ExtractionResult, PipelineConfig, extract_dataset,
                       extract_from_image, extract_from_path, predict_features,
                       predict_image, read_feature_csv, segment_image,
                       write_feature_csv)
from .reduce import (PcaModel, Standardizer, fit_pca, fit_standardizer,
                     project, standardize)
from .segmentation import (SegmentationConfig, estimate_background, morph_close,
                           morph_tophat, remove_stem, segment)
from .synth import CorpusSpec, ShapeClass, render_instance, synth_corpus

__version__ = "0.1.0"

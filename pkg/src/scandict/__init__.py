"""Scandiction: joint scanning and prediction of 2D data arrays."""

from .grid import (Alphabet, BINARY, BlockLayout, DataArray, REAL, Rect, Site,
                   block_partition, full_block_index_order, raster_block_order)
from .loss import (ABSOLUTE, AffineApprox, HAMMING, LOG, LOSSES, LossFn, SQUARED,
                   bayes_envelope, binary_entropy, fmg_gap, get_loss,
                   inv_binary_entropy, minimax_affine)
from .scan import (BlockwiseScanner, FsmScanner, FsmScannerSpec, ScanTrajectory,
                   Scanner, blockwise_compose, context_overlap, fsm_scan,
                   hilbert_order, hilbert_scan, hilbert_scan_rect, odds_then_evens,
                   raster_scan, serpentine_fsm, serpentine_scan)
from .predict import (MarkovTable, SequentialPredictor, bayes_predict, markov_fit,
                      scandict, sequence_loss)
from .entropy import (EmpiricalModel, cond_entropy, consistency_gap,
                      consistency_within_bound, empirical_dist,
                      lz78_compressibility, sandwich_bound, sandwich_check)
from .fields import (FieldSpec, analytic_optimum, chain_conditional,
                     chain_scan_losses, generate, shift_adversary_instance)
from .universal import (Expert, RunLog, chernoff_tail, optimal_eta, regret_bound,
                        run_universal, weights_update)
from .fullpool import TinyBlockPool, run_tiny_universal

__version__ = "0.1.0"

"""propshape: depth-conditioned prop generation with a shape-evaluation harness."""

from .mesh import (Aabb, NormalizationResult, PointCloud, TriangleMesh,
                   bounding_box, normalize_unit_sphere, sample_surface,
                   surface_area)
from .meshio import load_mesh, save_mesh
from .registration import (AlignmentResult, IcpParams, RigidTransform,
                           icp_align, kabsch, random_rotation, robust_align)
from .metrics import (SimilarityReport, chamfer, directed_nn_distances,
                      evaluate_pair, hausdorff)
from .depthmap import (CameraPose, DepthImage, Orthographic, Perspective,
                       encode_depth_png, decode_depth_png, render_depth,
                       standard_viewpoint)
from .prompts import (PromptSpec, PromptTemplate, TemplateKind,
                      classify_prompt, load_prompt_set, render_prompt)
from .anchor import AnchorTransform, apply_anchor, compute_anchor
from .mockmesh import mock_generate_mesh
from .backends import BackendConfig, MockBackend
from .jobs import GenerationJob, JobState, JobStore, run_job, submit_job
from .stats import (AgreementStats, RatingRecord, SuccessSummary,
                    WilcoxonResult, fleiss_kappa, success_rates,
                    wilcoxon_signed_rank)
from .study import (StudyManifest, StudyReport, emit_report, ingest_dataset,
                    load_manifest, parse_report, run_study)

__version__ = "0.1.0"

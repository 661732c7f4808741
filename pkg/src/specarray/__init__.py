"""Desk-scale simulation of a 37-camera snapshot hyperspectral array.

Synthetic multi-view single-band capture with exact ground truth,
cross-spectral registration to the center view, and quantitative comparison
against filter-array demosaicing and coded-aperture snapshot alternatives.
"""

from .arrays import (ArrayLayout, CameraPose, build_hexagonal_layout,
                     build_layout, build_orthogonal_layout, convex_hull,
                     convex_hull_area, data_rate_gbit_s, hull_area_of_points,
                     layout_from_dict, layout_to_dict, load_layout, save_layout)
from .bench import (BenchmarkConfig, QualityReport, emit_report, load_config,
                    make_default_config, run_benchmark, run_gt_disparity_ablation,
                    save_config)
from .errors import (ConfigurationError, DimensionError, DomainError,
                     ReconstructionError)
from .metrics import (QualityScore, crop_intersection, mse, proportional_border,
                      psnr, ssim, ssim_global)
from .registration import (DisparityMap, OcclusionMap, RegistrationParams,
                           WarpedChannel, census_transform, detect_occlusions,
                           estimate_disparity, reconstruct_occluded, register_all,
                           warp_to_center)
from .scenes import (Background, GroundTruth, SceneSpec, Sprite, Texture,
                     generate_texture, load_scene, random_scene,
                     render_array_capture, render_view, save_scene)
from .snapshot import (CassiMeasurement, CodedMask, MosaicPattern,
                       blue_noise_mask, cassi_adjoint, cassi_forward,
                       default_pattern, demosaic_dwt, demosaic_isd, demosaic_sd,
                       demosaic_wbi, gap_tv_reconstruct, mosaic, tv_denoise)
from .spectral import (BandPlan, HyperCube, Illuminant, load_cube,
                       planck_illuminant, planck_radiance, render_rgb_preview,
                       save_cube, srgb_encode)

__version__ = "0.1.0"

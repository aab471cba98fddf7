from .metrics import albedo_preservation, psnr, smoothness_proxy, ssim
from .report import EvalReport, compare_modes, copy_input_psnr, iie_comparison
from .figures import save_contact_sheet, save_report_figures

__all__ = [
    "albedo_preservation",
    "psnr",
    "smoothness_proxy",
    "ssim",
    "EvalReport",
    "compare_modes",
    "copy_input_psnr",
    "iie_comparison",
    "save_contact_sheet",
    "save_report_figures",
]

from .render import load_manifest, prepare_bucketed_3d, prepare_combo_bars, render_manifest

__all__ = [
    "load_manifest",
    "prepare_bucketed_3d",
    "prepare_combo_bars",
    "render_manifest",
]
__version__ = "0.1.0"

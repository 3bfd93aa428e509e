from .ops import BrushAction, BrushOp, MorphKind, apply_brush, morph

__all__ = ["BrushAction", "BrushOp", "MorphKind", "apply_brush", "morph"]

"""Figure rendering for dualctl result CSVs."""

from .recipes import RECIPES, RecipeError, render

__all__ = ["RECIPES", "RecipeError", "render"]

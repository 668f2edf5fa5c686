"""Анализатор стохастической устойчивости logit-response динамики."""

"""Counterfactual interventions and conditional twins on discrete SCMs."""

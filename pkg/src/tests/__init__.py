"""Tests for the CTBN Gibbs sampler."""

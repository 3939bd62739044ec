"""Unit tests for the CTBN Gibbs sampler."""

"""Model engine: equilibrium, flows, policy lab, survey simulation and estimation."""

"""Oracle complexity testbed: instances, oracles, algorithms, information bounds and experiments."""

"""Scale-and-shift alignment, error measures and the dataset evaluation loop."""

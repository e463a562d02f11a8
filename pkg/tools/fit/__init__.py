# fit: decay exponent of min rho

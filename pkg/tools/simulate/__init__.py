# simulate: solver run plus manifest

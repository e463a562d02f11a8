# trace: characteristics through a stored run

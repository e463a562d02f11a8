# verify: monitor report for a stored run

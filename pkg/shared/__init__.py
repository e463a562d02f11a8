# Numerics, run storage and configuration shared by the command tools

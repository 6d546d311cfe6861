# Avalanche toolkit application package

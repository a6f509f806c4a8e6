from .app import PeriodicRK

PeriodicRK().run()

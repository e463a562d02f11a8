# list-scenarios

"""dacml: classify disadvantaged-community status from census employment
and income data, trace model behavior, and project labels onto past years.
"""

__version__ = "0.1.0"

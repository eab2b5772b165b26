"""
LangSmith Configuration Module

This module sets up LangSmith tracing for the reward scoring pipeline.
Misconfiguration only produces warnings; scoring never depends on tracing.
"""

import os
from typing import List, Tuple

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

REQUIRED_VARS = ("LANGSMITH_API_KEY", "LANGSMITH_ENDPOINT", "LANGSMITH_PROJECT")


def tracing_requested() -> bool:
    return os.getenv("LANGSMITH_TRACING", "false").lower() == "true"


def configure_langsmith(verbose: bool = True) -> bool:
    """
    Configure LangSmith with environment variables

    Returns:
        bool: True if LangSmith is properly configured, False otherwise
    """
    if not tracing_requested():
        if verbose:
            print("📊 LangSmith tracing is disabled")
        return False

    missing = [name for name in REQUIRED_VARS if not os.getenv(name)]
    if missing:
        for name in missing:
            print(f"⚠️ {name} not found in environment variables")
        return False

    endpoint = os.environ["LANGSMITH_ENDPOINT"]
    project = os.environ["LANGSMITH_PROJECT"]
    if verbose:
        print("✅ LangSmith configuration:")
        print(f"   🔗 Endpoint: {endpoint}")
        print(f"   📝 Project: {project}")
        print("   🔑 API key configured: yes")
        print("   📊 Tracing: Enabled")

    # Set environment variables for LangSmith (in case they weren't set globally)
    os.environ["LANGCHAIN_TRACING_V2"] = "true"
    os.environ["LANGCHAIN_ENDPOINT"] = endpoint
    os.environ["LANGCHAIN_API_KEY"] = os.environ["LANGSMITH_API_KEY"]
    os.environ["LANGCHAIN_PROJECT"] = project
    return True


def get_langsmith_config() -> dict:
    return {
        "tracing_enabled": tracing_requested(),
        "endpoint": os.getenv("LANGSMITH_ENDPOINT"),
        "project": os.getenv("LANGSMITH_PROJECT"),
        "has_api_key": bool(os.getenv("LANGSMITH_API_KEY"))
    }


def validate_langsmith_setup() -> Tuple[bool, List[str]]:
    """
    Validate LangSmith setup and return issues if any. Tracing switched off
    is a valid setup.
    """
    if not tracing_requested():
        return True, []

    issues = [f"{name} is not set" for name in REQUIRED_VARS if not os.getenv(name)]

    # Check API key format (basic validation)
    api_key = os.getenv("LANGSMITH_API_KEY")
    if api_key and not api_key.startswith("lsv2_"):
        issues.append("LANGSMITH_API_KEY appears to have invalid format")

    return len(issues) == 0, issues


def init_tracing() -> bool:
    """Entry-point hook: warn about issues, enable tracing when possible"""
    is_valid, issues = validate_langsmith_setup()
    if not is_valid:
        print("⚠️  LangSmith configuration issues detected:")
        for issue in issues:
            print(f"   • {issue}")
        print("   Scoring will continue but tracing may not work properly.")
    return configure_langsmith(verbose=False)


if __name__ == "__main__":
    # Test the configuration when run directly
    print("🔧 Testing LangSmith Configuration...")
    print("=" * 50)

    is_valid, issues = validate_langsmith_setup()

    if is_valid:
        configure_langsmith()
        print("✅ LangSmith setup is consistent")
    else:
        print("❌ LangSmith configuration issues found:")
        for issue in issues:
            print(f"   • {issue}")
        print("\nPlease check your .env file and ensure all required variables are set.")
